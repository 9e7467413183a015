#pragma once

#include "biopsim/geometry.hpp"
#include "biopsim/voxel_grid.hpp"

#include <optional>
#include <vector>

namespace biopsim {

struct TrailSegmentation {
  std::vector<Index3> voxel_indices;
  Segment3 fitted;
  double inlier_rms = 0.0;
  double threshold = 0.0;
};

/// A 26-connected bright component and its principal-axis statistics.
struct Component {
  std::vector<std::size_t> voxels;  // linear indices
  Point3 centroid = Point3::Zero();
  Vec3 axis = Vec3::UnitX();
  /// Ratio of major to minor principal extent (voxel size included, so a single
  /// voxel scores 1).
  double elongation = 1.0;
};

inline constexpr double kMinTrailElongation = 3.0;

/// Midpoint between the tissue level (brightest histogram mode holding >= 1% of the
/// tallest peak) and the median of voxels more than 5 tissue sds above it.
double auto_threshold(const IntensityVolume& volume);

/// 26-connected components of voxels with intensity strictly above threshold,
/// largest first (ties broken by lowest voxel index).
std::vector<Component> bright_components(const IntensityVolume& volume, double threshold);

/// Recover the single needle trail. threshold = nullopt selects auto_threshold.
/// Throws NoTrailFound or AmbiguousTrail.
TrailSegmentation segment_trail(const IntensityVolume& volume,
                                std::optional<double> threshold = std::nullopt);

}  // namespace biopsim
