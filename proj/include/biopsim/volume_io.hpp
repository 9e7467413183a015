#pragma once

#include "biopsim/json_util.hpp"
#include "biopsim/voxel_grid.hpp"

#include <filesystem>

namespace biopsim {

/// Volume file pair: a JSON header
///   {dims, spacing_mm, origin_mm, dtype: "f32", seed, raw, ...extra}
/// and a sidecar raw file of little-endian float32 values, x fastest.
/// `extra` members are copied into the header (e.g. ground-truth trail).
void write_volume(const std::filesystem::path& header_path, const IntensityVolume& volume,
                  std::uint64_t seed, const Json& extra = Json::object());
void write_volume(const std::filesystem::path& header_path, const MaskVolume& mask,
                  std::uint64_t seed, const Json& extra = Json::object());

struct LoadedVolume {
  IntensityVolume volume;
  Json header;
};

/// Throws BadInput for malformed headers or truncated raw data.
LoadedVolume read_volume(const std::filesystem::path& header_path);

}  // namespace biopsim
