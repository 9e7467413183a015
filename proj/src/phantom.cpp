#include "biopsim/phantom.hpp"

#include "biopsim/error.hpp"
#include "biopsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace biopsim {

namespace {

// Normalised (u, v) positions of the landmarks on the anterior hemisphere.
constexpr std::array<std::array<double, 2>, 3> kLandmarkUv{{{-0.45, -0.35}, {0.45, -0.35}, {0.0, 0.5}}};

Vec3 world_half_extent(const Ellipsoid& e) {
  Vec3 h;
  for (int i = 0; i < 3; ++i) {
    h(i) = (e.orientation.row(i).transpose().cwiseProduct(e.semi_axes)).norm();
  }
  return h;
}

}  // namespace

ProstateModel ProstateModel::transformed(const RigidTransform& t) const {
  ProstateModel out = *this;
  out.shape = shape.transformed(t);
  for (auto& l : out.landmarks) l = t.apply(l);
  return out;
}

ProstateModel make_prostate(double volume_cc, const Vec3& aspect) {
  if (!(volume_cc > 0.0) || !std::isfinite(volume_cc)) {
    throw Error(ErrorCode::InvalidArgument, "volume must be positive");
  }
  if (!(aspect.minCoeff() > 0.0) || !aspect.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "aspect components must be positive");
  }
  const double target_mm3 = volume_cc * 1000.0;
  const double unit_mm3 = 4.0 / 3.0 * std::numbers::pi * aspect.prod();
  const double scale = std::cbrt(target_mm3 / unit_mm3);

  ProstateModel m;
  m.volume_cc = volume_cc;
  m.shape.semi_axes = aspect * scale;
  for (std::size_t i = 0; i < 3; ++i) {
    const double u = kLandmarkUv[i][0];
    const double v = kLandmarkUv[i][1];
    const double w = std::sqrt(1.0 - u * u - v * v);
    m.landmarks[i] = m.shape.to_world(Vec3(u, v, w).cwiseProduct(m.shape.semi_axes));
  }
  return m;
}

void validate(const ProstateModel& model) {
  if (!(model.shape.semi_axes.minCoeff() > 0.0)) {
    throw Error(ErrorCode::ValidationFailed, "semi-axes must be positive");
  }
  for (const auto& l : model.landmarks) {
    if (ellipsoid_surface_distance(l, model.shape) > 1e-6) {
      throw Error(ErrorCode::ValidationFailed, "landmark off the prostate surface");
    }
  }
  const Vec3 n = (model.landmarks[1] - model.landmarks[0]).cross(model.landmarks[2] - model.landmarks[0]);
  if (n.norm() < 1e-6) throw Error(ErrorCode::ValidationFailed, "landmarks collinear");
  const double vol_cc = model.shape.volume_mm3() / 1000.0;
  if (std::abs(vol_cc - model.volume_cc) > 0.005 * model.volume_cc) {
    throw Error(ErrorCode::ValidationFailed, "ellipsoid volume differs from volume_cc");
  }
}

GridGeometry prostate_grid(const ProstateModel& model, double spacing_mm, double margin_mm,
                           std::int64_t max_per_axis) {
  const Vec3 h = world_half_extent(model.shape) + Vec3::Constant(margin_mm);
  return GridGeometry::covering(model.shape.center - h, model.shape.center + h, spacing_mm,
                                max_per_axis);
}

MaskVolume rasterize_prostate_mask(const ProstateModel& model, double spacing_mm,
                                   std::int64_t max_per_axis) {
  if (!(spacing_mm > 0.1 && spacing_mm <= 2.0)) {
    throw Error(ErrorCode::InvalidArgument, "spacing must lie in (0.1, 2.0] mm");
  }
  return rasterize_prostate_mask(model, prostate_grid(model, spacing_mm, kGridMarginMm, max_per_axis));
}

MaskVolume rasterize_prostate_mask(const ProstateModel& model, const GridGeometry& grid) {
  MaskVolume mask(grid, 0);
  const Ellipsoid& e = model.shape;
  const Mat3 rt = e.orientation.transpose();
  const Vec3 inv = e.semi_axes.cwiseInverse();
  std::size_t n = 0;
  for (std::int64_t k = 0; k < grid.dims[2]; ++k) {
    for (std::int64_t j = 0; j < grid.dims[1]; ++j) {
      for (std::int64_t i = 0; i < grid.dims[0]; ++i, ++n) {
        const Vec3 q = (rt * (grid.center(i, j, k) - e.center)).cwiseProduct(inv);
        mask[n] = q.squaredNorm() <= 1.0 ? 1 : 0;
      }
    }
  }
  return mask;
}

double mask_volume_mm3(const MaskVolume& mask) {
  const auto count = std::count_if(mask.data().begin(), mask.data().end(),
                                   [](std::uint8_t v) { return v != 0; });
  return static_cast<double>(count) * mask.geometry().voxel_volume();
}

void SynthesisParams::validate() const {
  if (!(trail_intensity > prostate_intensity && prostate_intensity > background_mean)) {
    throw Error(ErrorCode::InvalidArgument,
                "intensities must satisfy trail > prostate > background mean");
  }
  if (!(trail_radius_mm > 0.0)) throw Error(ErrorCode::InvalidArgument, "trail radius must be positive");
  if (!(background_noise_sd >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise sd must be >= 0");
  if (!(spacing_mm > 0.1 && spacing_mm <= 2.0)) {
    throw Error(ErrorCode::InvalidArgument, "spacing must lie in (0.1, 2.0] mm");
  }
}

namespace {

template <typename Fn>
void for_each_in_box(const GridGeometry& g, const Point3& lo, const Point3& hi, Fn&& fn) {
  Index3 first, last;
  if (!g.index_box(lo, hi, first, last)) return;
  for (std::int64_t k = first[2]; k <= last[2]; ++k)
    for (std::int64_t j = first[1]; j <= last[1]; ++j)
      for (std::int64_t i = first[0]; i <= last[0]; ++i) fn(Index3{i, j, k});
}

}  // namespace

IntensityVolume synthesize_volume(const ProstateModel& model, const std::optional<Segment3>& trail,
                                  const SynthesisParams& params) {
  params.validate();
  const Vec3 h = world_half_extent(model.shape) + Vec3::Constant(kGridMarginMm);
  Point3 lo = model.shape.center - h;
  Point3 hi = model.shape.center + h;
  if (trail) {
    const Vec3 pad = Vec3::Constant(params.trail_radius_mm + 2.0);
    lo = lo.cwiseMin(trail->start.cwiseMin(trail->end) - pad);
    hi = hi.cwiseMax(trail->start.cwiseMax(trail->end) + pad);
  }
  const GridGeometry grid = GridGeometry::covering(lo, hi, params.spacing_mm);

  const MaskVolume inside = rasterize_prostate_mask(model, grid);
  std::vector<float> level(grid.voxel_count());
  for (std::size_t n = 0; n < level.size(); ++n) {
    level[n] = static_cast<float>(inside[n] ? params.prostate_intensity : params.background_mean);
  }

  const double r = kLandmarkBlobRadiusMm;
  for (const Point3& c : model.landmarks) {
    for_each_in_box(grid, c - Vec3::Constant(r), c + Vec3::Constant(r), [&](const Index3& idx) {
      if ((grid.center(idx) - c).norm() <= r) {
        level[grid.linear(idx)] = static_cast<float>(params.landmark_intensity);
      }
    });
  }

  if (trail) {
    const Vec3 pad = Vec3::Constant(params.trail_radius_mm);
    for_each_in_box(grid, trail->start.cwiseMin(trail->end) - pad,
                    trail->start.cwiseMax(trail->end) + pad, [&](const Index3& idx) {
                      if (point_segment_distance(grid.center(idx), *trail) <= params.trail_radius_mm) {
                        level[grid.linear(idx)] = static_cast<float>(params.trail_intensity);
                      }
                    });
  }

  if (params.background_noise_sd > 0.0) {
    Rng rng(params.rng_seed);
    for (float& v : level) {
      const double noisy = v + params.background_noise_sd * rng.normal();
      v = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
    }
  }
  return IntensityVolume(grid, std::move(level));
}

}  // namespace biopsim

namespace biopsim {

Json model_to_json(const ProstateModel& model) {
  Json j;
  j["volume_cc"] = model.volume_cc;
  j["center_mm"] = to_json(model.shape.center);
  j["semi_axes_mm"] = to_json(model.shape.semi_axes);
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(to_json(model.shape.orientation.row(r).transpose()));
  j["orientation"] = rows;
  Json lms = Json::array();
  for (const auto& l : model.landmarks) lms.push_back(to_json(l));
  j["landmarks_mm"] = lms;
  return j;
}

ProstateModel model_from_json(const Json& j) {
  ProstateModel m;
  try {
    m.volume_cc = j.at("volume_cc").get<double>();
    m.shape.center = vec3_from_json(j.at("center_mm"), "center_mm");
    m.shape.semi_axes = vec3_from_json(j.at("semi_axes_mm"), "semi_axes_mm");
    const Json& rows = j.at("orientation");
    if (!rows.is_array() || rows.size() != 3) throw Error(ErrorCode::BadInput, "orientation must be 3x3");
    for (int r = 0; r < 3; ++r) m.shape.orientation.row(r) = vec3_from_json(rows[r], "orientation row").transpose();
    const Json& lms = j.at("landmarks_mm");
    if (!lms.is_array() || lms.size() != 3) throw Error(ErrorCode::BadInput, "exactly 3 landmarks required");
    for (std::size_t i = 0; i < 3; ++i) m.landmarks[i] = vec3_from_json(lms[i], "landmark");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadInput, std::string("model: ") + e.what());
  }
  // Rejects non-rigid orientations.
  try {
    RigidTransform check(m.shape.orientation, Vec3::Zero());
  } catch (const Error&) {
    throw Error(ErrorCode::ValidationFailed, "model orientation is not a rotation");
  }
  validate(m);
  return m;
}

}  // namespace biopsim
