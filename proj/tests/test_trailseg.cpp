#include "biopsim/error.hpp"
#include "biopsim/phantom.hpp"
#include "biopsim/trailseg.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace biopsim;

namespace {

double endpoint_error(const Segment3& fit, const Segment3& truth) {
  const double same = std::max((fit.start - truth.start).norm(), (fit.end - truth.end).norm());
  const double swapped = std::max((fit.start - truth.end).norm(), (fit.end - truth.start).norm());
  return std::min(same, swapped);
}

double angle_deg(const Vec3& a, const Vec3& b) {
  return std::acos(std::min(1.0, std::abs(a.normalized().dot(b.normalized())))) * 180.0 / std::numbers::pi;
}

const Segment3 kTrail{{-4, -6, -18}, {2, 3, 3.3}};

void paint(IntensityVolume& v, const Segment3& s, double radius, float value) {
  const GridGeometry& g = v.geometry();
  for (std::size_t n = 0; n < v.size(); ++n)
    if (point_segment_distance(g.center(g.unravel(n)), s) <= radius) v[n] = value;
}

}  // namespace

TEST_CASE("noiseless trail is recovered") {
  const ProstateModel m = make_prostate(40.0);
  SynthesisParams p;
  p.background_noise_sd = 0.0;
  const Segment3 truth{kTrail.start, kTrail.start + 23.0 * kTrail.direction()};
  const IntensityVolume v = synthesize_volume(m, truth, p);
  const TrailSegmentation seg = segment_trail(v);
  CHECK(endpoint_error(seg.fitted, truth) <= 0.5);
  CHECK(angle_deg(seg.fitted.direction(), truth.direction()) < 1.0);
  CHECK(seg.inlier_rms <= p.trail_radius_mm + p.spacing_mm);
  CHECK(seg.threshold > p.prostate_intensity);
  CHECK(seg.threshold < p.trail_intensity);

  const TrailSegmentation same = segment_trail(v, seg.threshold);
  CHECK(same.voxel_indices == seg.voxel_indices);
  CHECK((same.fitted.start - seg.fitted.start).norm() == 0.0);
  CHECK((same.fitted.end - seg.fitted.end).norm() == 0.0);
}

TEST_CASE("auto threshold separates gland and trail levels") {
  const ProstateModel m = make_prostate(40.0);
  SynthesisParams p;
  p.rng_seed = 3;
  const IntensityVolume v = synthesize_volume(m, kTrail, p);
  const double t = auto_threshold(v);
  CHECK(t == doctest::Approx(0.5 * (p.prostate_intensity + p.trail_intensity)).epsilon(0.05));
}

TEST_CASE("noisy trails stay within two voxels") {
  const ProstateModel m = make_prostate(40.0);
  SynthesisParams p;
  p.background_noise_sd = 0.05;
  p.trail_intensity = p.prostate_intensity + 0.3;
  const Segment3 truth{kTrail.start, kTrail.start + 23.0 * kTrail.direction()};
  int good = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    p.rng_seed = seed;
    const TrailSegmentation seg = segment_trail(synthesize_volume(m, truth, p));
    const double err = endpoint_error(seg.fitted, truth);
    worst = std::max(worst, err);
    good += err <= 2 * p.spacing_mm;
  }
  INFO("worst endpoint error " << worst);
  CHECK(good == 100);
}

TEST_CASE("trail-free volume has no trail") {
  const ProstateModel m = make_prostate(40.0);
  SynthesisParams p;
  p.rng_seed = 1;
  const IntensityVolume v = synthesize_volume(m, std::nullopt, p);
  try {
    segment_trail(v);
    FAIL("expected NoTrailFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoTrailFound);
  }
  SynthesisParams quiet = p;
  quiet.background_noise_sd = 0.0;
  try {
    segment_trail(synthesize_volume(m, std::nullopt, quiet), 0.7);
    FAIL("expected NoTrailFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoTrailFound);
  }
}

TEST_CASE("two similar trails are ambiguous") {
  const ProstateModel m = make_prostate(40.0);
  SynthesisParams p;
  p.background_noise_sd = 0.0;
  IntensityVolume v = synthesize_volume(m, kTrail, p);
  paint(v, {kTrail.start + Vec3(10, 0, 0), kTrail.end + Vec3(10, 0, 0)}, p.trail_radius_mm,
        float(p.trail_intensity));
  try {
    segment_trail(v, 0.675);
    FAIL("expected AmbiguousTrail");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AmbiguousTrail);
  }

  // A clearly shorter second trail is tolerated.
  IntensityVolume w = synthesize_volume(m, kTrail, p);
  paint(w, {kTrail.start + Vec3(10, 0, 0), kTrail.start + Vec3(10, 0, 0) + 8.0 * kTrail.direction()},
        p.trail_radius_mm, float(p.trail_intensity));
  CHECK_NOTHROW(segment_trail(w, 0.675));
}

TEST_CASE("fitted direction is invariant under rigid motion") {
  const ProstateModel m = make_prostate(40.0);
  SynthesisParams p;
  p.background_noise_sd = 0.0;
  const Vec3 base_dir = segment_trail(synthesize_volume(m, kTrail, p)).fitted.direction();
  Rng rng(12);
  for (int i = 0; i < 4; ++i) {
    const RigidTransform t = biopsim::testing::random_rigid(rng, 5.0);
    const TrailSegmentation seg = segment_trail(synthesize_volume(m.transformed(t), t.apply(kTrail), p));
    CHECK(angle_deg(seg.fitted.direction(), t.apply_vector(base_dir)) < 1.0);
    CHECK(angle_deg(seg.fitted.direction(), t.apply_vector(kTrail.direction())) < 1.0);
  }
}

TEST_CASE("percentile endpoints resist dropped voxels") {
  const ProstateModel m = make_prostate(40.0);
  SynthesisParams p;
  p.background_noise_sd = 0.0;
  IntensityVolume v = synthesize_volume(m, kTrail, p);
  const TrailSegmentation ref = segment_trail(v, 0.675);
  Rng rng(77);
  for (int round = 0; round < 10; ++round) {
    IntensityVolume w = v;
    const std::size_t drop = ref.voxel_indices.size() / 100;
    for (std::size_t k = 0; k < drop; ++k) {
      const Index3& idx = ref.voxel_indices[rng.below(ref.voxel_indices.size())];
      w.at(idx) = float(p.background_mean);
    }
    const TrailSegmentation seg = segment_trail(w, 0.675);
    CHECK(endpoint_error(seg.fitted, ref.fitted) < 2 * p.spacing_mm);
  }
}
