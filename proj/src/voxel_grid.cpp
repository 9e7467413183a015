#include "biopsim/voxel_grid.hpp"

#include "biopsim/error.hpp"

#include <algorithm>
#include <cmath>

namespace biopsim {

Index3 GridGeometry::unravel(std::size_t n) const {
  const auto nn = static_cast<std::int64_t>(n);
  const std::int64_t i = nn % dims[0];
  const std::int64_t j = (nn / dims[0]) % dims[1];
  const std::int64_t k = nn / (dims[0] * dims[1]);
  return {i, j, k};
}

bool GridGeometry::index_box(const Point3& lo, const Point3& hi, Index3& first,
                             Index3& last) const {
  const Vec3 a = to_index(lo);
  const Vec3 b = to_index(hi);
  for (int ax = 0; ax < 3; ++ax) {
    const auto f = static_cast<std::int64_t>(std::ceil(a(ax) - 1e-9));
    const auto l = static_cast<std::int64_t>(std::floor(b(ax) + 1e-9));
    first[ax] = std::max<std::int64_t>(f, 0);
    last[ax] = std::min<std::int64_t>(l, dims[ax] - 1);
    if (first[ax] > last[ax]) return false;
  }
  return true;
}

GridGeometry GridGeometry::covering(const Point3& lo, const Point3& hi, double spacing,
                                    std::int64_t max_voxels_per_axis) {
  if (!(spacing > 0.0)) throw Error(ErrorCode::InvalidArgument, "spacing must be positive");
  GridGeometry g;
  g.spacing = spacing;
  // Snap the origin to the spacing lattice so grids built over different boxes align.
  for (int ax = 0; ax < 3; ++ax) {
    const double first = std::floor(lo(ax) / spacing) * spacing;
    const double last = std::ceil(hi(ax) / spacing) * spacing;
    const auto n = static_cast<std::int64_t>(std::llround((last - first) / spacing)) + 1;
    if (n > max_voxels_per_axis) {
      throw Error(ErrorCode::GridTooLarge, "grid would need " + std::to_string(n) +
                                               " voxels along an axis (cap " +
                                               std::to_string(max_voxels_per_axis) + ")");
    }
    g.origin(ax) = first;
    g.dims[ax] = std::max<std::int64_t>(n, 1);
  }
  return g;
}

}  // namespace biopsim
