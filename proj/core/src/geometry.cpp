#include "shadowgrid/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

namespace shadowgrid {

double wrap_angle(double angle) {
  double a = std::fmod(angle + kPi, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  a -= kPi;
  // fmod can land exactly on +pi after the shift for inputs like -pi - 2pi.
  if (a >= kPi) a -= kTwoPi;
  return a;
}

Vec3 cartesian_from_spherical(const SphericalPoint& p) {
  const double ce = std::cos(p.elevation);
  return {p.range * std::cos(p.azimuth) * ce, p.range * std::sin(p.azimuth) * ce,
          p.range * std::sin(p.elevation)};
}

SphericalPoint spherical_from_cartesian(const Vec3& q) {
  const double r = q.norm();
  if (!(r >= 1e-12)) {
    throw GeometryError("spherical_from_cartesian: point at the origin has no direction");
  }
  const double horizontal = std::hypot(q.x(), q.y());
  SphericalPoint s;
  s.range = r;
  s.elevation = std::atan2(q.z(), horizontal);
  s.azimuth = horizontal == 0.0 ? 0.0 : wrap_angle(std::atan2(q.y(), q.x()));
  return s;
}

Mat3 rotation_from_euler(double roll, double pitch, double yaw) {
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  Mat3 r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
       sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
       -sp,     cp * sr,                cp * cr;
  return r;
}

EulerAngles euler_from_rotation(const Mat3& r) {
  const double sp = std::clamp(-r(2, 0), -1.0, 1.0);
  const double pitch = std::asin(sp);
  if (std::abs(std::abs(pitch) - kPi / 2.0) < 1e-6) {
    throw GeometryError("euler_from_rotation: pitch at gimbal lock");
  }
  EulerAngles e;
  e.pitch = pitch;
  e.roll = std::atan2(r(2, 1), r(2, 2));
  e.yaw = std::atan2(r(1, 0), r(0, 0));
  return e;
}

RigidTransform RigidTransform::from_state(const Vec6& s) {
  RigidTransform t;
  t.translation = s.head<3>();
  t.rotation = rotation_from_euler(s(3), s(4), s(5));
  return t;
}

Vec6 RigidTransform::state() const {
  const EulerAngles e = euler_from_rotation(rotation);
  Vec6 s;
  s << translation, e.roll, e.pitch, e.yaw;
  return s;
}

bool RigidTransform::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  // a(b(p)) = Ra (Rb p - tb) - ta
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

RigidTransform invert(const RigidTransform& t) {
  // q = R p - t  =>  p = R^T q + R^T t
  RigidTransform out;
  out.rotation = t.rotation.transpose();
  out.translation = -(out.rotation * t.translation);
  return out;
}

Mat3 orthonormalize(const Mat3& rotation) {
  Eigen::JacobiSVD<Mat3> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return r;
}

Pose Pose::from_xyz_yaw(double x, double y, double z, double yaw) {
  Pose p;
  p.rotation = rotation_from_euler(0.0, 0.0, yaw);
  p.position = {x, y, z};
  return p;
}

RigidTransform relative_transform(const Pose& primary, const Pose& secondary) {
  // q = Ra^T (Rb p + pb - pa) = R p - t with t = Ra^T (pa - pb).
  RigidTransform t;
  t.rotation = primary.rotation.transpose() * secondary.rotation;
  t.translation = primary.rotation.transpose() * (primary.position - secondary.position);
  return t;
}

}  // namespace shadowgrid
