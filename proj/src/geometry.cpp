#include "biopsim/geometry.hpp"

#include "biopsim/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace biopsim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::CollinearLandmarks: return "CollinearLandmarks";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NoIntersection: return "NoIntersection";
    case ErrorCode::GridTooLarge: return "GridTooLarge";
    case ErrorCode::NoTrailFound: return "NoTrailFound";
    case ErrorCode::AmbiguousTrail: return "AmbiguousTrail";
    case ErrorCode::TemplateInfeasible: return "TemplateInfeasible";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::CalibrationFailed: return "CalibrationFailed";
    case ErrorCode::UnpairedData: return "UnpairedData";
    case ErrorCode::BadInput: return "BadInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  const double ortho_err = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho_err <= 1e-9) || std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "rotation is not a proper orthonormal matrix");
  }
  if (!translation.allFinite()) throw Error(ErrorCode::InvalidArgument, "translation not finite");
}

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis, double angle_rad,
                                               const Vec3& translation) {
  const Mat3 r = Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
  return RigidTransform(r, translation);
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation_ = rotation_.transpose();
  inv.translation_ = -(inv.rotation_ * translation_);
  return inv;
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
  RigidTransform out;
  out.rotation_ = rotation_ * other.rotation_;
  out.translation_ = rotation_ * other.translation_ + translation_;
  return out;
}

double Ellipsoid::implicit_value(const Point3& p) const {
  const Point3 q = to_local(p);
  return (q.array() / semi_axes.array()).square().sum();
}

double Ellipsoid::volume_mm3() const {
  return 4.0 / 3.0 * std::numbers::pi * semi_axes.prod();
}

Vec3 Ellipsoid::normal_at(const Point3& surface_point) const {
  const Point3 q = to_local(surface_point);
  const Vec3 grad_local = (q.array() / semi_axes.array().square()).matrix();
  return (orientation * grad_local).normalized();
}

Ellipsoid Ellipsoid::transformed(const RigidTransform& t) const {
  Ellipsoid out = *this;
  out.center = t.apply(center);
  out.orientation = t.rotation() * orientation;
  return out;
}

RigidTransform kabsch_align(std::span<const Point3> source, std::span<const Point3> target) {
  if (source.size() != target.size()) {
    throw Error(ErrorCode::LengthMismatch, "source and target landmark counts differ");
  }
  if (source.size() < 3) {
    throw Error(ErrorCode::CollinearLandmarks, "at least 3 landmarks are required");
  }
  const double n = static_cast<double>(source.size());
  Point3 src_mean = Point3::Zero();
  Point3 dst_mean = Point3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    src_mean += source[i];
    dst_mean += target[i];
  }
  src_mean /= n;
  dst_mean /= n;

  Mat3 src_scatter = Mat3::Zero();
  Mat3 cross = Mat3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec3 a = source[i] - src_mean;
    const Vec3 b = target[i] - dst_mean;
    src_scatter += a * a.transpose();
    cross += b * a.transpose();
  }

  // Rank test on the centred source cloud: the second singular value of the
  // point matrix is the RMS spread orthogonal to the best-fit line.
  Eigen::JacobiSVD<Mat3> src_svd(src_scatter);
  const double second_extent = std::sqrt(std::max(0.0, src_svd.singularValues()(1)));
  if (second_extent < 1e-6) {
    throw Error(ErrorCode::CollinearLandmarks, "source landmarks span fewer than 2 dimensions");
  }

  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  Mat3 r = svd.matrixU() * d * svd.matrixV().transpose();

  // Re-orthonormalise to absorb SVD round-off before the strict ctor check.
  Eigen::JacobiSVD<Mat3> polish(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  r = polish.matrixU() * polish.matrixV().transpose();
  return RigidTransform(r, dst_mean - r * src_mean);
}

double point_segment_distance(const Point3& p, const Segment3& s) {
  const Vec3 d = s.end - s.start;
  const double len2 = d.squaredNorm();
  double t = len2 > 0.0 ? (p - s.start).dot(d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (s.start + t * d)).norm();
}

double point_line_distance(const Point3& p, const Point3& origin, const Vec3& unit_dir) {
  const Vec3 w = p - origin;
  return (w - w.dot(unit_dir) * unit_dir).norm();
}

std::optional<std::pair<double, double>> line_ellipsoid_interval(const Point3& origin,
                                                                 const Vec3& direction,
                                                                 const Ellipsoid& e) {
  const Vec3 inv = e.semi_axes.cwiseInverse();
  const Vec3 o = e.to_local(origin).cwiseProduct(inv);
  const Vec3 d = (e.orientation.transpose() * direction).cwiseProduct(inv);
  const double a = d.squaredNorm();
  const double b = 2.0 * o.dot(d);
  const double c = o.squaredNorm() - 1.0;
  const double disc = b * b - 4.0 * a * c;
  if (a <= 0.0 || disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double q = -0.5 * (b + std::copysign(root, b));
  double t0 = q / a;
  double t1 = q != 0.0 ? c / q : t0;
  if (t0 > t1) std::swap(t0, t1);
  return std::make_pair(t0, t1);
}

Point3 ray_ellipsoid_entry(const Point3& origin, const Vec3& direction, const Ellipsoid& e) {
  const auto interval = line_ellipsoid_interval(origin, direction, e);
  if (!interval || interval->second < 0.0) {
    throw Error(ErrorCode::NoIntersection, "ray misses the ellipsoid");
  }
  const double t = interval->first >= 0.0 ? interval->first : interval->second;
  return origin + t * direction;
}

double sphere_surface_distance(const Point3& p, const Sphere& z) {
  return std::max(0.0, (p - z.center).norm() - z.radius);
}

double segment_length_inside(const Segment3& s, const Ellipsoid& e) {
  const double len = s.length();
  if (len <= 0.0) return 0.0;
  const Vec3 dir = (s.end - s.start) / len;
  const auto interval = line_ellipsoid_interval(s.start, dir, e);
  if (!interval) return 0.0;
  const double lo = std::max(0.0, interval->first);
  const double hi = std::min(len, interval->second);
  return std::max(0.0, hi - lo);
}

std::pair<Vec3, Vec3> orthonormal_basis(const Vec3& unit_v) {
  const Vec3 helper = std::abs(unit_v.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 u = unit_v.cross(helper).normalized();
  return {u, unit_v.cross(u)};
}

namespace {

constexpr int kRootIterations = 1100;

double robust_length(double a, double b) { return std::hypot(a, b); }
double robust_length(double a, double b, double c) { return std::hypot(a, b, c); }

// Bisection for the Lagrange multiplier of the closest-point problem
// (Eberly, "Distance from a point to an ellipse, an ellipsoid, or a hyperellipsoid").
double ellipse_root(double r0, double z0, double z1, double g) {
  const double n0 = r0 * z0;
  double s0 = z1 - 1.0;
  double s1 = g < 0.0 ? 0.0 : robust_length(n0, z1) - 1.0;
  double s = 0.0;
  for (int i = 0; i < kRootIterations; ++i) {
    s = 0.5 * (s0 + s1);
    if (s == s0 || s == s1) break;
    const double ratio0 = n0 / (s + r0);
    const double ratio1 = z1 / (s + 1.0);
    g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
    if (g > 0.0) s0 = s;
    else if (g < 0.0) s1 = s;
    else break;
  }
  return s;
}

double ellipsoid_root(double r0, double r1, double z0, double z1, double z2, double g) {
  const double n0 = r0 * z0;
  const double n1 = r1 * z1;
  double s0 = z2 - 1.0;
  double s1 = g < 0.0 ? 0.0 : robust_length(n0, n1, z2) - 1.0;
  double s = 0.0;
  for (int i = 0; i < kRootIterations; ++i) {
    s = 0.5 * (s0 + s1);
    if (s == s0 || s == s1) break;
    const double ratio0 = n0 / (s + r0);
    const double ratio1 = n1 / (s + r1);
    const double ratio2 = z2 / (s + 1.0);
    g = ratio0 * ratio0 + ratio1 * ratio1 + ratio2 * ratio2 - 1.0;
    if (g > 0.0) s0 = s;
    else if (g < 0.0) s1 = s;
    else break;
  }
  return s;
}

// e0 >= e1 > 0, y0, y1 >= 0.
double ellipse_distance(double e0, double e1, double y0, double y1) {
  if (y1 > 0.0) {
    if (y0 > 0.0) {
      const double z0 = y0 / e0;
      const double z1 = y1 / e1;
      const double g = z0 * z0 + z1 * z1 - 1.0;
      if (g == 0.0) return 0.0;
      const double r0 = (e0 / e1) * (e0 / e1);
      const double sbar = ellipse_root(r0, z0, z1, g);
      const double x0 = r0 * y0 / (sbar + r0);
      const double x1 = y1 / (sbar + 1.0);
      return std::hypot(x0 - y0, x1 - y1);
    }
    return std::abs(y1 - e1);
  }
  const double numer0 = e0 * y0;
  const double denom0 = e0 * e0 - e1 * e1;
  if (numer0 < denom0) {
    const double xde0 = numer0 / denom0;
    const double x0 = e0 * xde0;
    const double x1 = e1 * std::sqrt(1.0 - xde0 * xde0);
    return std::hypot(x0 - y0, x1);
  }
  return std::abs(y0 - e0);
}

// e0 >= e1 >= e2 > 0, y_i >= 0.
double ellipsoid_distance_sorted(double e0, double e1, double e2, double y0, double y1, double y2) {
  if (y2 > 0.0) {
    if (y1 > 0.0) {
      if (y0 > 0.0) {
        const double z0 = y0 / e0;
        const double z1 = y1 / e1;
        const double z2 = y2 / e2;
        const double g = z0 * z0 + z1 * z1 + z2 * z2 - 1.0;
        if (g == 0.0) return 0.0;
        const double r0 = (e0 / e2) * (e0 / e2);
        const double r1 = (e1 / e2) * (e1 / e2);
        const double sbar = ellipsoid_root(r0, r1, z0, z1, z2, g);
        const double x0 = r0 * y0 / (sbar + r0);
        const double x1 = r1 * y1 / (sbar + r1);
        const double x2 = y2 / (sbar + 1.0);
        return std::hypot(x0 - y0, x1 - y1, x2 - y2);
      }
      return ellipse_distance(e1, e2, y1, y2);
    }
    if (y0 > 0.0) return ellipse_distance(e0, e2, y0, y2);
    return std::abs(y2 - e2);
  }
  const double denom0 = e0 * e0 - e2 * e2;
  const double denom1 = e1 * e1 - e2 * e2;
  const double numer0 = e0 * y0;
  const double numer1 = e1 * y1;
  if (numer0 < denom0 && numer1 < denom1) {
    const double xde0 = numer0 / denom0;
    const double xde1 = numer1 / denom1;
    const double discr = 1.0 - xde0 * xde0 - xde1 * xde1;
    if (discr > 0.0) {
      const double x0 = e0 * xde0;
      const double x1 = e1 * xde1;
      const double x2 = e2 * std::sqrt(discr);
      return std::hypot(x0 - y0, x1 - y1, x2);
    }
  }
  return ellipse_distance(e0, e1, y0, y1);
}

}  // namespace

double ellipsoid_surface_distance(const Point3& p, const Ellipsoid& e) {
  const Point3 q = e.to_local(p).cwiseAbs();
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return e.semi_axes(i) > e.semi_axes(j); });
  return ellipsoid_distance_sorted(e.semi_axes(order[0]), e.semi_axes(order[1]),
                                   e.semi_axes(order[2]), q(order[0]), q(order[1]), q(order[2]));
}

}  // namespace biopsim
