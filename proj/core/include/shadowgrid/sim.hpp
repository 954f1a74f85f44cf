#pragma once

// Analytic ray-casting Lidar simulator.
//
// Scenes are built from a ground surface (flat plane or smooth heightfield),
// finite vertical walls and vertical cylindrical columns. The sensor is
// gimballed: beam elevations are fixed relative to gravity and the beam
// pattern turns with the platform yaw only through the pose rotation.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "shadowgrid/geometry.hpp"
#include "shadowgrid/point_cloud.hpp"

namespace shadowgrid::sim {

using Vec2 = Eigen::Vector2d;

struct FlatGround {
  double height = 0.0;
};

/// z = sum_k amplitude_k * sin(wavevector_k . (x, y) + phase_k), defined
/// over a square of half-width `half_extent` around `center`.
struct Heightfield {
  struct Wave {
    double amplitude = 0.0;
    Vec2 wavevector = Vec2::Zero();
    double phase = 0.0;
  };
  std::vector<Wave> waves;
  Vec2 center = Vec2::Zero();
  double half_extent = 50.0;

  double height(double x, double y) const;
  Vec2 gradient(double x, double y) const;
  /// Upper bound on |grad h|.
  double slope_bound() const;
  bool inside(double x, double y) const;
};

using Ground = std::variant<FlatGround, Heightfield>;

/// Vertical rectangle above the segment [start, end] between z_min and z_max.
struct Wall {
  Vec2 start = Vec2::Zero();
  Vec2 end = Vec2::Zero();
  double z_min = 0.0;
  double z_max = 0.0;
};

/// Vertical column with a flat top cap.
struct Cylinder {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;
};

struct Scene {
  std::string name;
  Ground ground = FlatGround{};
  std::vector<Wall> walls;
  std::vector<Cylinder> cylinders;
  std::optional<std::uint64_t> seed;

  /// Throws std::invalid_argument for degenerate primitives.
  void validate() const;
  double ground_height(double x, double y) const;
};

struct RoadwayParams {
  int column_count = 10;
  double column_radius = 0.4;
  double column_height = 7.0;
  double column_spacing = 8.0;
  double column_line_offset = 4.0;  // y of the column line
  double first_column_x = -20.0;
  double wall_offset = 10.0;        // walls at y = +/- wall_offset
  double wall_height = 4.0;
  double wall_x_min = -60.0;
  double wall_x_max = 100.0;
};

struct OffroadParams {
  int wave_count = 8;
  double wavelength_min = 15.0;
  double wavelength_max = 60.0;
  double relief_amplitude = 3.0;  // sum of wave amplitudes, meters
  double half_extent = 50.0;
};

Scene build_roadway_scene(const RoadwayParams& params);
Scene build_offroad_scene(const OffroadParams& params, std::uint64_t seed);

struct LidarModel {
  std::vector<double> elevations;  // radians, strictly increasing
  double azimuth_step = deg2rad(0.2);
  double azimuth_offset = deg2rad(0.1);  // first beam at -pi + offset
  double min_range = 1.0;
  double max_range = 120.0;
  double range_noise_sigma = 0.02;

  /// Throws std::invalid_argument.
  void validate() const;
  int azimuth_count() const;
  std::size_t beam_count() const { return elevations.size() * static_cast<std::size_t>(azimuth_count()); }

  /// `channels` beams uniform in [min_deg, max_deg].
  static LidarModel uniform(int channels, double min_deg, double max_deg, double azimuth_step_deg,
                            double max_range = 120.0, double sigma = 0.02);
  /// 64 channels in [-24.8, +2.0] deg, 0.2 deg azimuth step.
  static LidarModel hdl64e_like();
  /// 32 channels in [-24.8, +2.0] deg, 0.72 deg azimuth step.
  static LidarModel desk();
};

class RaycastError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RayHit {
  double range = 0.0;
  SurfaceKind kind = SurfaceKind::kUnknown;
};

/// Nearest intersection of the ray origin + t * direction (unit direction)
/// with the scene for t in [t_min, t_max].
std::optional<RayHit> cast_ray(const Scene& scene, const Vec3& origin, const Vec3& direction, double t_min,
                               double t_max);

/// Simulated sweep in the sensor frame. Returns are perturbed along the ray
/// by Gaussian range noise drawn from a stream seeded with `seed`.
/// Throws RaycastError when the sensor is not above the ground.
PointCloud raycast_scan(const Scene& scene, const LidarModel& lidar, const Pose& pose, std::uint64_t seed);

enum class TrajectoryKind { kRoadway, kOffroad };

struct TrajectoryParams {
  TrajectoryKind kind = TrajectoryKind::kRoadway;
  int frames = 41;
  double rate_hz = 10.0;
  double speed = 5.0;          // m/s along the heading
  double yaw_rate = 0.0;       // rad/s
  double sensor_height = 1.73; // above the ground surface
  Vec2 start = Vec2::Zero();
  double start_yaw = 0.0;

  static TrajectoryParams roadway();  // 20 m straight at 5 m/s, 41 frames
  static TrajectoryParams offroad();  // 5 m/s and 30 deg/s, 21 frames
};

struct TimedPose {
  double time = 0.0;
  Pose pose;
};

struct Trajectory {
  std::vector<TimedPose> poses;
};

/// The sensor follows the ground surface of `scene` at sensor_height.
Trajectory generate_trajectory(const TrajectoryParams& params, const Scene& scene);

void to_json(nlohmann::json& j, const Scene& scene);
void from_json(const nlohmann::json& j, Scene& scene);

}  // namespace shadowgrid::sim
