#pragma once

#include "biopsim/geometry.hpp"
#include "biopsim/phantom.hpp"
#include "biopsim/protocol.hpp"
#include "biopsim/voxel_grid.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace biopsim {

inline constexpr double kCoreLengthMm = 23.0;
/// 0.6 mm needle radius plus a 5 mm margin (half the diameter of a 0.5 cc lesion).
inline constexpr double kBiopsyCylinderRadiusMm = 5.6;

struct BiopsyPath {
  Segment3 core;
  StationId station;
};

/// Path of exactly core_length along dir ending at tip.
BiopsyPath make_path(const Point3& tip, const Vec3& dir, const StationId& station,
                     double core_length = kCoreLengthMm);

struct BiopsyScore {
  double entry_error_mm = 0.0;
  double target_error_mm = 0.0;
  std::optional<Point3> entry_point;
  double in_prostate_core_length_mm = 0.0;
  /// Needle line never crosses the gland; entry error then uses the closest line point.
  bool missed = false;
};

/// The core end farther along approach_dir.
Point3 core_tip(const Segment3& core, const Vec3& approach_dir);

BiopsyScore score_biopsy(const BiopsyPath& path, const TemplateEntry& ideal, const ProstateModel& model);

/// Linear indices (ascending) of mask voxels inside the flat-ended cylinder of
/// the given radius around the core.
std::vector<std::size_t> rasterize_biopsy_cylinder(const BiopsyPath& path, const MaskVolume& mask,
                                                   double radius_mm = kBiopsyCylinderRadiusMm);

struct CoverageReport {
  double explored_volume_mm3 = 0.0;
  double per_biopsy_volume_mm3 = 0.0;
  double single_fraction = 0.0;
  double redundancy_ratio = 1.0;
  /// hit_histogram[m] = voxels hit by exactly m cylinders (m >= 1; index 0 unused).
  std::vector<std::uint64_t> hit_histogram;
  std::uint64_t union_voxels = 0;
  std::uint64_t summed_voxels = 0;
};

/// Hit-count union of the paths' cylinders over the prostate mask.
/// With nothing sampled, redundancy_ratio is reported as 1 and single_fraction as 0.
CoverageReport coverage_report(std::span<const BiopsyPath> paths, const MaskVolume& mask,
                               double radius_mm = kBiopsyCylinderRadiusMm);

}  // namespace biopsim
