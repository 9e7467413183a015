#pragma once

#include "biopsim/geometry.hpp"
#include "biopsim/rng.hpp"

#include <cmath>
#include <numbers>

namespace biopsim::testing {

inline Vec3 random_unit(Rng& rng) {
  Vec3 v;
  do {
    v = Vec3(rng.normal(), rng.normal(), rng.normal());
  } while (v.norm() < 1e-6);
  return v.normalized();
}

inline RigidTransform random_rigid(Rng& rng, double max_translation = 50.0) {
  const double angle = rng.uniform() * 2.0 * std::numbers::pi;
  const Vec3 t(max_translation * (2 * rng.uniform() - 1), max_translation * (2 * rng.uniform() - 1),
               max_translation * (2 * rng.uniform() - 1));
  return RigidTransform::from_axis_angle(random_unit(rng), angle, t);
}

inline Ellipsoid random_ellipsoid(Rng& rng) {
  Ellipsoid e;
  e.center = Vec3(rng.normal(0, 10), rng.normal(0, 10), rng.normal(0, 10));
  e.semi_axes = Vec3(5 + 25 * rng.uniform(), 5 + 25 * rng.uniform(), 5 + 25 * rng.uniform());
  e.orientation = random_rigid(rng).rotation();
  return e;
}

}  // namespace biopsim::testing
