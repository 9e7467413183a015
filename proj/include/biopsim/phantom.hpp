#pragma once

#include "biopsim/geometry.hpp"
#include "biopsim/voxel_grid.hpp"

#include <array>
#include <cstdint>
#include <optional>

namespace biopsim {

/// Synthetic gland: an ellipsoid plus three registration landmarks on its
/// anterior (+z, convex) surface.
///
/// Frame: x transverse (patient left is -x), y cranio-caudal (apex -y, base +y),
/// z antero-posterior with the rectal probe on the -z side.
struct ProstateModel {
  Ellipsoid shape;
  std::array<Point3, 3> landmarks;
  double volume_cc = 0.0;

  ProstateModel transformed(const RigidTransform& t) const;
};

inline constexpr double kDefaultVolumeCc = 40.0;
inline const Vec3 kDefaultAspect{25.0, 20.0, 19.1};
inline constexpr double kGridMarginMm = 12.0;
inline constexpr double kLandmarkBlobRadiusMm = 1.5;

/// Ellipsoid with semi-axes proportional to aspect and volume volume_cc·1000 mm³.
/// Landmarks sit at fixed normalised positions on the anterior surface; they are
/// at least 10 mm apart for glands of roughly 5 cc and up.
ProstateModel make_prostate(double volume_cc, const Vec3& aspect = kDefaultAspect);

/// Throws ValidationFailed naming the first violated invariant.
void validate(const ProstateModel& model);

/// Voxel grid spanning the gland's world bounding box plus a margin.
GridGeometry prostate_grid(const ProstateModel& model, double spacing_mm,
                           double margin_mm = kGridMarginMm, std::int64_t max_per_axis = 512);

/// 1 where the voxel centre satisfies the (closed) ellipsoid inequality.
MaskVolume rasterize_prostate_mask(const ProstateModel& model, double spacing_mm,
                                   std::int64_t max_per_axis = 512);
MaskVolume rasterize_prostate_mask(const ProstateModel& model, const GridGeometry& grid);

double mask_volume_mm3(const MaskVolume& mask);

struct SynthesisParams {
  double background_mean = 0.1;
  double background_noise_sd = 0.03;
  double prostate_intensity = 0.45;
  double trail_intensity = 0.9;
  double landmark_intensity = 0.9;
  double trail_radius_mm = 0.6;
  double spacing_mm = 0.5;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Noisy intensity volume of the gland with its landmark blobs and, optionally,
/// a single hyperechoic needle trail. The grid also covers the whole trail.
IntensityVolume synthesize_volume(const ProstateModel& model, const std::optional<Segment3>& trail,
                                  const SynthesisParams& params);

}  // namespace biopsim

#include "biopsim/json_util.hpp"

namespace biopsim {

Json model_to_json(const ProstateModel& model);
/// Throws BadInput / ValidationFailed.
ProstateModel model_from_json(const Json& j);

}  // namespace biopsim
