#pragma once

#include "biopsim/geometry.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace biopsim {

using Index3 = std::array<std::int64_t, 3>;

/// Placement of an axis-aligned isotropic lattice in phantom space.
/// origin is the centre of voxel (0,0,0); x is the fastest-varying index.
struct GridGeometry {
  Point3 origin = Point3::Zero();
  double spacing = 0.5;
  Index3 dims{1, 1, 1};

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0] * dims[1] * dims[2]);
  }
  double voxel_volume() const { return spacing * spacing * spacing; }

  std::size_t linear(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return static_cast<std::size_t>(i + dims[0] * (j + dims[1] * k));
  }
  std::size_t linear(const Index3& idx) const { return linear(idx[0], idx[1], idx[2]); }
  Index3 unravel(std::size_t n) const;

  Point3 center(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return origin + spacing * Point3(double(i), double(j), double(k));
  }
  Point3 center(const Index3& idx) const { return center(idx[0], idx[1], idx[2]); }
  /// Continuous index coordinates of a world point.
  Vec3 to_index(const Point3& p) const { return (p - origin) / spacing; }

  bool in_bounds(const Index3& idx) const {
    return idx[0] >= 0 && idx[1] >= 0 && idx[2] >= 0 && idx[0] < dims[0] && idx[1] < dims[1] &&
           idx[2] < dims[2];
  }
  /// World-space box covered by voxel centres.
  Point3 min_corner() const { return origin; }
  Point3 max_corner() const { return center(dims[0] - 1, dims[1] - 1, dims[2] - 1); }

  /// Index box (inclusive) of voxel centres inside the world box, clamped to the grid.
  /// Returns false when the box misses the grid entirely.
  bool index_box(const Point3& lo, const Point3& hi, Index3& first, Index3& last) const;

  /// Grid covering [lo, hi] with the given spacing. Throws GridTooLarge above max_voxels_per_axis.
  static GridGeometry covering(const Point3& lo, const Point3& hi, double spacing,
                               std::int64_t max_voxels_per_axis = 512);

  bool operator==(const GridGeometry&) const = default;
};

template <typename T>
class VoxelGrid {
 public:
  VoxelGrid() = default;
  explicit VoxelGrid(GridGeometry geometry, T fill = T{})
      : geometry_(geometry), data_(geometry.voxel_count(), fill) {}
  VoxelGrid(GridGeometry geometry, std::vector<T> data)
      : geometry_(geometry), data_(std::move(data)) {}

  const GridGeometry& geometry() const { return geometry_; }
  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

  T& operator[](std::size_t n) { return data_[n]; }
  const T& operator[](std::size_t n) const { return data_[n]; }
  T& at(const Index3& idx) { return data_[geometry_.linear(idx)]; }
  const T& at(const Index3& idx) const { return data_[geometry_.linear(idx)]; }

  std::size_t size() const { return data_.size(); }

 private:
  GridGeometry geometry_;
  std::vector<T> data_;
};

using IntensityVolume = VoxelGrid<float>;
using MaskVolume = VoxelGrid<std::uint8_t>;
using HitCountVolume = VoxelGrid<std::uint16_t>;

}  // namespace biopsim
