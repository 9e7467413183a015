#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>
#include <span>
#include <vector>

namespace biopsim {

/// Millimetres in phantom space.
using Point3 = Eigen::Vector3d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Segment3 {
  Point3 start = Point3::Zero();
  Point3 end = Point3::UnitX();

  double length() const { return (end - start).norm(); }
  Vec3 direction() const { return (end - start).normalized(); }
  Point3 midpoint() const { return 0.5 * (start + end); }
};

/// Proper rigid motion p -> R p + t.
class RigidTransform {
 public:
  RigidTransform() = default;
  /// Throws InvalidArgument unless rotation is orthonormal with det +1 (tol 1e-9).
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_axis_angle(const Vec3& axis, double angle_rad, const Vec3& translation);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  Vec3 apply_vector(const Vec3& v) const { return rotation_ * v; }
  Segment3 apply(const Segment3& s) const { return {apply(s.start), apply(s.end)}; }

  RigidTransform inverse() const;
  /// (*this * other)(p) == this->apply(other.apply(p))
  RigidTransform operator*(const RigidTransform& other) const;

 private:
  Mat3 rotation_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
};

struct Ellipsoid {
  Point3 center = Point3::Zero();
  Vec3 semi_axes = Vec3::Ones();
  /// Columns are the local axes expressed in world coordinates.
  Mat3 orientation = Mat3::Identity();

  Point3 to_local(const Point3& p) const { return orientation.transpose() * (p - center); }
  Point3 to_world(const Point3& q) const { return orientation * q + center; }

  /// Σ (q_i / a_i)^2 in the local frame; <= 1 means inside (closed).
  double implicit_value(const Point3& p) const;
  bool contains(const Point3& p) const { return implicit_value(p) <= 1.0; }
  double volume_mm3() const;
  /// Outward unit normal at a surface point.
  Vec3 normal_at(const Point3& surface_point) const;

  Ellipsoid transformed(const RigidTransform& t) const;
};

struct Sphere {
  Point3 center = Point3::Zero();
  double radius = 1.0;
};

/// Least-squares rigid transform T minimising Σ |T·source_i − target_i|².
/// Throws LengthMismatch, or CollinearLandmarks when source spans < 2 dimensions.
RigidTransform kabsch_align(std::span<const Point3> source, std::span<const Point3> target);

double point_segment_distance(const Point3& p, const Segment3& s);

/// Distance from p to the infinite line through s.
double point_line_distance(const Point3& p, const Point3& origin, const Vec3& unit_dir);

/// First surface crossing of the ray origin + t·dir (t ≥ 0). Throws NoIntersection.
Point3 ray_ellipsoid_entry(const Point3& origin, const Vec3& direction, const Ellipsoid& e);

/// Parameters (t_in, t_out) along origin + t·dir where the infinite line crosses e.
std::optional<std::pair<double, double>> line_ellipsoid_interval(const Point3& origin,
                                                                 const Vec3& direction,
                                                                 const Ellipsoid& e);

/// max(0, |p − c| − r).
double sphere_surface_distance(const Point3& p, const Sphere& z);

/// Euclidean distance from p to the ellipsoid surface (unsigned).
double ellipsoid_surface_distance(const Point3& p, const Ellipsoid& e);

/// Length of the part of s lying inside e.
double segment_length_inside(const Segment3& s, const Ellipsoid& e);

/// Any unit vector orthogonal to v, plus a second completing a right-handed frame.
std::pair<Vec3, Vec3> orthonormal_basis(const Vec3& unit_v);

}  // namespace biopsim
