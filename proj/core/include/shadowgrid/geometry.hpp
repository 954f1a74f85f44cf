#pragma once

// Coordinate conventions shared by the grid, the matcher and the simulator.
//
//   * Spherical coordinates: x = r cos(az) cos(el), y = r sin(az) cos(el),
//     z = r sin(el). Azimuth lives in [-pi, pi), elevation in [-pi/2, pi/2].
//   * Rotations use intrinsic Z-Y-X Euler angles: R = Rz(yaw) Ry(pitch) Rx(roll).
//   * A RigidTransform maps a secondary-scan point p into primary-scan
//     coordinates as q = R p - t (the translation is subtracted).

#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace shadowgrid {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

class GeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct SphericalPoint {
  double range = 0.0;      // meters
  double azimuth = 0.0;    // radians, [-pi, pi)
  double elevation = 0.0;  // radians, [-pi/2, pi/2]
};

/// Wraps an angle into [-pi, pi).
double wrap_angle(double angle);

Vec3 cartesian_from_spherical(const SphericalPoint& p);

/// Throws GeometryError for points closer than 1e-12 m to the origin.
/// At the poles the azimuth is reported as 0.
SphericalPoint spherical_from_cartesian(const Vec3& q);

struct EulerAngles {
  double roll = 0.0;   // phi, about x
  double pitch = 0.0;  // theta, about y
  double yaw = 0.0;    // psi, about z
};

Mat3 rotation_from_euler(double roll, double pitch, double yaw);
inline Mat3 rotation_from_euler(const EulerAngles& e) {
  return rotation_from_euler(e.roll, e.pitch, e.yaw);
}

/// Throws GeometryError within 1e-6 rad of gimbal lock (|pitch| = pi/2).
EulerAngles euler_from_rotation(const Mat3& rotation);

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  /// Builds the transform from the 6-vector (x, y, z, roll, pitch, yaw).
  static RigidTransform from_state(const Vec6& state);
  /// Inverse of from_state.
  Vec6 state() const;

  /// R p - t
  Vec3 apply(const Vec3& p) const { return rotation * p - translation; }

  bool is_valid(double tol = 1e-9) const;
};

/// Composition such that compose(a, b).apply(p) == a.apply(b.apply(p)).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);

/// Re-orthonormalizes a nearly orthonormal rotation (polar decomposition).
Mat3 orthonormalize(const Mat3& rotation);

/// Pose of a sensor in a world frame: world = rotation * sensor + position.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 position = Vec3::Zero();

  static Pose from_xyz_yaw(double x, double y, double z, double yaw);
  Vec3 to_world(const Vec3& sensor_point) const { return rotation * sensor_point + position; }
  Vec3 to_sensor(const Vec3& world_point) const {
    return rotation.transpose() * (world_point - position);
  }
};

/// Transform that maps points measured at `secondary` into the frame of
/// `primary` using the q = R p - t convention.
RigidTransform relative_transform(const Pose& primary, const Pose& secondary);

}  // namespace shadowgrid
