#include "biopsim/scoring.hpp"

#include "biopsim/error.hpp"

#include <algorithm>
#include <cmath>

namespace biopsim {

BiopsyPath make_path(const Point3& tip, const Vec3& dir, const StationId& station, double core_length) {
  const Vec3 d = dir.normalized();
  return {{tip - core_length * d, tip}, station};
}

Point3 core_tip(const Segment3& core, const Vec3& approach_dir) {
  return (core.end - core.start).dot(approach_dir) >= 0.0 ? core.end : core.start;
}

BiopsyScore score_biopsy(const BiopsyPath& path, const TemplateEntry& ideal, const ProstateModel& model) {
  if (!(path.station == ideal.station)) {
    throw Error(ErrorCode::InvalidArgument, "path station does not match template entry");
  }
  const Point3 tip = core_tip(path.core, ideal.approach_direction);
  const Point3 tail = tip == path.core.end ? path.core.start : path.core.end;
  const Vec3 dir = (tip - tail).normalized();

  BiopsyScore score;
  score.target_error_mm = sphere_surface_distance(tip, ideal.target_zone);
  score.in_prostate_core_length_mm = segment_length_inside(path.core, model.shape);

  const auto crossing = line_ellipsoid_interval(tip, dir, model.shape);
  if (crossing) {
    score.entry_point = tip + crossing->first * dir;
    score.entry_error_mm = sphere_surface_distance(*score.entry_point, ideal.entry_zone);
  } else {
    score.missed = true;
    score.entry_error_mm =
        std::max(0.0, point_line_distance(ideal.entry_zone.center, tip, dir) - ideal.entry_zone.radius);
  }
  return score;
}

std::vector<std::size_t> rasterize_biopsy_cylinder(const BiopsyPath& path, const MaskVolume& mask,
                                                   double radius_mm) {
  const GridGeometry& g = mask.geometry();
  const Point3& a = path.core.start;
  const Vec3 axis = path.core.end - a;
  const double len = axis.norm();
  std::vector<std::size_t> out;
  if (!(len > 0.0)) return out;
  const Vec3 u = axis / len;

  Index3 first, last;
  const Vec3 pad = Vec3::Constant(radius_mm);
  if (!g.index_box(a.cwiseMin(path.core.end) - pad, a.cwiseMax(path.core.end) + pad, first, last)) {
    return out;
  }
  const double r2 = radius_mm * radius_mm;
  for (std::int64_t k = first[2]; k <= last[2]; ++k) {
    for (std::int64_t j = first[1]; j <= last[1]; ++j) {
      for (std::int64_t i = first[0]; i <= last[0]; ++i) {
        const std::size_t n = g.linear(i, j, k);
        if (!mask[n]) continue;
        const Vec3 w = g.center(i, j, k) - a;
        const double t = w.dot(u);
        if (t < 0.0 || t > len) continue;
        if ((w - t * u).squaredNorm() <= r2) out.push_back(n);
      }
    }
  }
  return out;
}

CoverageReport coverage_report(std::span<const BiopsyPath> paths, const MaskVolume& mask, double radius_mm) {
  if (paths.empty()) throw Error(ErrorCode::InvalidArgument, "coverage needs at least one path");
  HitCountVolume hits(mask.geometry(), 0);
  CoverageReport rep;
  std::vector<std::size_t> touched;
  for (const BiopsyPath& p : paths) {
    const auto voxels = rasterize_biopsy_cylinder(p, mask, radius_mm);
    rep.summed_voxels += voxels.size();
    for (const std::size_t n : voxels) {
      if (hits[n] == 0) touched.push_back(n);
      ++hits[n];
    }
  }
  std::uint16_t max_hits = 0;
  for (const std::size_t n : touched) max_hits = std::max(max_hits, hits[n]);
  rep.hit_histogram.assign(static_cast<std::size_t>(max_hits) + 1, 0);
  for (const std::size_t n : touched) ++rep.hit_histogram[hits[n]];

  rep.union_voxels = touched.size();
  const double vv = mask.geometry().voxel_volume();
  rep.explored_volume_mm3 = static_cast<double>(rep.union_voxels) * vv;
  rep.per_biopsy_volume_mm3 = rep.explored_volume_mm3 / static_cast<double>(paths.size());
  if (rep.union_voxels > 0) {
    const std::uint64_t single = rep.hit_histogram.size() > 1 ? rep.hit_histogram[1] : 0;
    rep.single_fraction = static_cast<double>(single) / static_cast<double>(rep.union_voxels);
    rep.redundancy_ratio = static_cast<double>(rep.union_voxels) / static_cast<double>(rep.summed_voxels);
  }
  return rep;
}

}  // namespace biopsim
