#include "biopsim/volume_io.hpp"

#include "biopsim/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace biopsim {

Vec3 vec3_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() ||
      !j[2].is_number()) {
    throw Error(ErrorCode::BadInput, std::string(what) + " must be a 3-element numeric array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::BadInput, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadInput, path.string() + ": " + e.what());
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::BadInput, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(ErrorCode::BadInput, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_json_atomic(const std::filesystem::path& path, const Json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

namespace {

std::string encode_f32_le(const std::vector<float>& values) {
  std::string bytes(values.size() * 4, '\0');
  for (std::size_t n = 0; n < values.size(); ++n) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(values[n]);
    for (int b = 0; b < 4; ++b) bytes[4 * n + b] = static_cast<char>((bits >> (8 * b)) & 0xFFu);
  }
  return bytes;
}

void write_f32(const std::filesystem::path& header_path, const GridGeometry& g,
               const std::vector<float>& values, std::uint64_t seed, const Json& extra) {
  std::filesystem::path raw_path = header_path;
  raw_path.replace_extension(".raw");
  Json header;
  header["dims"] = Json::array({g.dims[0], g.dims[1], g.dims[2]});
  header["spacing_mm"] = g.spacing;
  header["origin_mm"] = to_json(g.origin);
  header["dtype"] = "f32";
  header["seed"] = seed;
  header["raw"] = raw_path.filename().string();
  for (auto it = extra.begin(); it != extra.end(); ++it) header[it.key()] = it.value();
  write_text_atomic(raw_path, encode_f32_le(values));
  write_json_atomic(header_path, header);
}

}  // namespace

void write_volume(const std::filesystem::path& header_path, const IntensityVolume& volume,
                  std::uint64_t seed, const Json& extra) {
  write_f32(header_path, volume.geometry(), volume.data(), seed, extra);
}

void write_volume(const std::filesystem::path& header_path, const MaskVolume& mask,
                  std::uint64_t seed, const Json& extra) {
  std::vector<float> values(mask.data().begin(), mask.data().end());
  write_f32(header_path, mask.geometry(), values, seed, extra);
}

LoadedVolume read_volume(const std::filesystem::path& header_path) {
  Json header = read_json_file(header_path);
  GridGeometry g;
  try {
    const auto& dims = header.at("dims");
    if (!dims.is_array() || dims.size() != 3) throw Error(ErrorCode::BadInput, "dims must have 3 entries");
    for (int ax = 0; ax < 3; ++ax) {
      g.dims[ax] = dims[ax].get<std::int64_t>();
      if (g.dims[ax] < 1) throw Error(ErrorCode::BadInput, "dims must be >= 1");
    }
    g.spacing = header.at("spacing_mm").get<double>();
    if (!(g.spacing > 0.0)) throw Error(ErrorCode::BadInput, "spacing_mm must be positive");
    g.origin = vec3_from_json(header.at("origin_mm"), "origin_mm");
    if (header.at("dtype").get<std::string>() != "f32") {
      throw Error(ErrorCode::BadInput, "only dtype f32 is supported");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadInput, std::string("volume header: ") + e.what());
  }

  std::filesystem::path raw_path = header_path.parent_path() / header.value("raw", std::string{});
  std::ifstream in(raw_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::BadInput, "cannot open raw data " + raw_path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  if (bytes.size() != g.voxel_count() * 4) {
    throw Error(ErrorCode::BadInput, "raw data size does not match dims");
  }
  std::vector<float> values(g.voxel_count());
  for (std::size_t n = 0; n < values.size(); ++n) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * n + b])) << (8 * b);
    }
    values[n] = std::bit_cast<float>(bits);
  }
  return {IntensityVolume(g, std::move(values)), std::move(header)};
}

}  // namespace biopsim
