#include "shadowgrid/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace shadowgrid::sim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Candidate {
  double t = kInf;
  SurfaceKind kind = SurfaceKind::kUnknown;
  void offer(double t_hit, SurfaceKind k) {
    if (t_hit < t) {
      t = t_hit;
      kind = k;
    }
  }
};

void intersect_flat(const FlatGround& g, const Vec3& o, const Vec3& d, double t_min, double t_max, Candidate& c) {
  if (d.z() >= 0.0) return;
  const double t = (g.height - o.z()) / d.z();
  if (t >= t_min && t <= t_max) c.offer(t, SurfaceKind::kGround);
}

// Exit parameter of the ray from the heightfield's square footprint.
double footprint_exit(const Heightfield& h, const Vec3& o, const Vec3& d) {
  double t_exit = kInf;
  for (int axis = 0; axis < 2; ++axis) {
    if (d[axis] == 0.0) continue;
    const double lo = h.center[axis] - h.half_extent, hi = h.center[axis] + h.half_extent;
    const double t1 = (lo - o[axis]) / d[axis], t2 = (hi - o[axis]) / d[axis];
    t_exit = std::min(t_exit, std::max(t1, t2));
  }
  return t_exit;
}

void intersect_heightfield(const Heightfield& h, const Vec3& o, const Vec3& d, double t_min, double t_max,
                           Candidate& c) {
  if (!h.inside(o.x(), o.y())) return;
  const double t_end = std::min({t_max, footprint_exit(h, o, d), c.t});
  const auto gap = [&](double t) {
    const Vec3 p = o + t * d;
    return p.z() - h.height(p.x(), p.y());
  };
  const double rate = std::abs(d.z()) + h.slope_bound() * std::hypot(d.x(), d.y());
  constexpr double kMinStep = 0.02;

  double t = t_min;
  double f = gap(t);
  if (f <= 0.0) return;  // origin below the surface
  while (t < t_end) {
    const double step = std::max(f / std::max(rate, 1e-12), kMinStep);
    const double t_next = std::min(t + step, t_end);
    const double f_next = gap(t_next);
    if (f_next <= 0.0) {
      double lo = t, hi = t_next;
      for (int i = 0; i < 60 && hi - lo > 1e-10; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) > 0.0 ? lo : hi) = mid;
      }
      c.offer(hi, SurfaceKind::kTerrain);
      return;
    }
    t = t_next;
    f = f_next;
  }
}

void intersect_wall(const Wall& w, const Vec3& o, const Vec3& d, double t_min, double t_max, Candidate& c) {
  const Vec2 seg = w.end - w.start;
  const Vec2 normal(-seg.y(), seg.x());
  const double denom = normal.dot(d.head<2>());
  if (denom == 0.0) return;
  const double t = normal.dot(w.start - o.head<2>()) / denom;
  if (!(t >= t_min && t <= t_max)) return;
  const Vec3 p = o + t * d;
  const double s = (p.head<2>() - w.start).dot(seg) / seg.squaredNorm();
  if (s < 0.0 || s > 1.0 || p.z() < w.z_min || p.z() > w.z_max) return;
  c.offer(t, SurfaceKind::kWall);
}

void intersect_cylinder(const Cylinder& cyl, const Vec3& o, const Vec3& d, double t_min, double t_max,
                        Candidate& c) {
  const Vec2 oc = o.head<2>() - cyl.center;
  const Vec2 dxy = d.head<2>();
  const double a = dxy.squaredNorm();
  if (a > 0.0) {
    const double b = oc.dot(dxy);
    const double cc = oc.squaredNorm() - cyl.radius * cyl.radius;
    const double disc = b * b - a * cc;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      // outer surface only: the entering root
      const double t = (-b - sq) / a;
      if (t >= t_min && t <= t_max) {
        const double z = o.z() + t * d.z();
        if (z >= cyl.z_min && z <= cyl.z_max) c.offer(t, SurfaceKind::kColumn);
      }
    }
  }
  if (d.z() < 0.0 && o.z() > cyl.z_max) {
    const double t = (cyl.z_max - o.z()) / d.z();
    if (t >= t_min && t <= t_max && (oc + t * dxy).squaredNorm() <= cyl.radius * cyl.radius) {
      c.offer(t, SurfaceKind::kColumn);
    }
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

double Heightfield::height(double x, double y) const {
  double z = 0.0;
  for (const Wave& w : waves) z += w.amplitude * std::sin(w.wavevector.x() * x + w.wavevector.y() * y + w.phase);
  return z;
}

Vec2 Heightfield::gradient(double x, double y) const {
  Vec2 g = Vec2::Zero();
  for (const Wave& w : waves) {
    g += w.amplitude * std::cos(w.wavevector.x() * x + w.wavevector.y() * y + w.phase) * w.wavevector;
  }
  return g;
}

double Heightfield::slope_bound() const {
  double l = 0.0;
  for (const Wave& w : waves) l += std::abs(w.amplitude) * w.wavevector.norm();
  return l;
}

bool Heightfield::inside(double x, double y) const {
  return std::abs(x - center.x()) <= half_extent && std::abs(y - center.y()) <= half_extent;
}

void Scene::validate() const {
  for (const Wall& w : walls) {
    if (!((w.end - w.start).norm() > 0.0) || !(w.z_max > w.z_min)) {
      throw std::invalid_argument("Scene: wall with zero area");
    }
  }
  for (const Cylinder& c : cylinders) {
    if (!(c.radius > 0.0) || !(c.z_max > c.z_min)) throw std::invalid_argument("Scene: degenerate cylinder");
  }
  if (const auto* h = std::get_if<Heightfield>(&ground)) {
    if (!(h->half_extent > 0.0)) throw std::invalid_argument("Scene: heightfield extent must be positive");
    for (const auto& w : h->waves) {
      if (!std::isfinite(w.amplitude) || !w.wavevector.allFinite()) {
        throw std::invalid_argument("Scene: non-finite heightfield wave");
      }
    }
  }
}

double Scene::ground_height(double x, double y) const {
  if (const auto* f = std::get_if<FlatGround>(&ground)) return f->height;
  return std::get<Heightfield>(ground).height(x, y);
}

Scene build_roadway_scene(const RoadwayParams& p) {
  if (p.column_count < 0 || !(p.column_radius > 0.0) || !(p.column_height > 0.0) || !(p.wall_height > 0.0) ||
      !(p.wall_x_max > p.wall_x_min)) {
    throw std::invalid_argument("RoadwayParams: invalid geometry");
  }
  Scene s;
  s.name = "roadway";
  s.ground = FlatGround{0.0};
  for (double side : {-1.0, 1.0}) {
    s.walls.push_back(Wall{Vec2(p.wall_x_min, side * p.wall_offset), Vec2(p.wall_x_max, side * p.wall_offset),
                           0.0, p.wall_height});
  }
  for (int k = 0; k < p.column_count; ++k) {
    s.cylinders.push_back(Cylinder{Vec2(p.first_column_x + k * p.column_spacing, p.column_line_offset),
                                   p.column_radius, 0.0, p.column_height});
  }
  s.validate();
  return s;
}

Scene build_offroad_scene(const OffroadParams& p, std::uint64_t seed) {
  if (p.wave_count <= 0 || !(p.wavelength_min > 0.0) || !(p.wavelength_max >= p.wavelength_min) ||
      !(p.relief_amplitude >= 0.0) || !(p.half_extent > 0.0)) {
    throw std::invalid_argument("OffroadParams: invalid terrain parameters");
  }
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Heightfield h;
  h.half_extent = p.half_extent;
  double total = 0.0;
  for (int k = 0; k < p.wave_count; ++k) {
    Heightfield::Wave w;
    const double wavelength = p.wavelength_min + (p.wavelength_max - p.wavelength_min) * unit(rng);
    const double heading = kTwoPi * unit(rng);
    w.wavevector = (kTwoPi / wavelength) * Vec2(std::cos(heading), std::sin(heading));
    w.phase = kTwoPi * unit(rng);
    w.amplitude = 0.5 + 0.5 * unit(rng);
    total += w.amplitude;
    h.waves.push_back(w);
  }
  for (auto& w : h.waves) w.amplitude *= p.relief_amplitude / total;
  Scene s;
  s.name = "offroad";
  s.ground = h;
  s.seed = seed;
  s.validate();
  return s;
}

void LidarModel::validate() const {
  if (elevations.empty()) throw std::invalid_argument("LidarModel: no channels");
  for (std::size_t i = 1; i < elevations.size(); ++i) {
    if (!(elevations[i] > elevations[i - 1])) {
      throw std::invalid_argument("LidarModel: elevations must be strictly increasing");
    }
  }
  if (!(azimuth_step > 0.0)) throw std::invalid_argument("LidarModel: azimuth_step must be positive");
  const double n = kTwoPi / azimuth_step;
  if (std::abs(n - std::round(n)) > 1e-6) {
    throw std::invalid_argument("LidarModel: azimuth_step must divide 2*pi");
  }
  if (!(range_noise_sigma >= 0.0)) throw std::invalid_argument("LidarModel: noise sigma must be >= 0");
  if (!(min_range >= 0.0) || !(max_range > min_range)) {
    throw std::invalid_argument("LidarModel: require 0 <= min_range < max_range");
  }
}

int LidarModel::azimuth_count() const { return static_cast<int>(std::lround(kTwoPi / azimuth_step)); }

LidarModel LidarModel::uniform(int channels, double min_deg, double max_deg, double azimuth_step_deg,
                               double max_range, double sigma) {
  LidarModel m;
  m.elevations.resize(static_cast<std::size_t>(channels));
  for (int c = 0; c < channels; ++c) {
    const double frac = channels == 1 ? 0.0 : static_cast<double>(c) / (channels - 1);
    m.elevations[static_cast<std::size_t>(c)] = deg2rad(min_deg + frac * (max_deg - min_deg));
  }
  m.azimuth_step = deg2rad(azimuth_step_deg);
  m.azimuth_offset = 0.5 * m.azimuth_step;
  m.max_range = max_range;
  m.range_noise_sigma = sigma;
  m.validate();
  return m;
}

LidarModel LidarModel::hdl64e_like() { return uniform(64, -24.8, 2.0, 0.2); }
LidarModel LidarModel::desk() { return uniform(32, -24.8, 2.0, 0.72); }

std::optional<RayHit> cast_ray(const Scene& scene, const Vec3& o, const Vec3& d, double t_min, double t_max) {
  Candidate c;
  for (const Wall& w : scene.walls) intersect_wall(w, o, d, t_min, t_max, c);
  for (const Cylinder& cyl : scene.cylinders) intersect_cylinder(cyl, o, d, t_min, t_max, c);
  if (const auto* f = std::get_if<FlatGround>(&scene.ground)) {
    intersect_flat(*f, o, d, t_min, t_max, c);
  } else {
    // walls and columns found so far bound the march
    intersect_heightfield(std::get<Heightfield>(scene.ground), o, d, t_min, std::min(t_max, c.t), c);
  }
  if (!std::isfinite(c.t)) return std::nullopt;
  return RayHit{c.t, c.kind};
}

PointCloud raycast_scan(const Scene& scene, const LidarModel& lidar, const Pose& pose, std::uint64_t seed) {
  lidar.validate();
  const Vec3& o = pose.position;
  if (!(o.z() > scene.ground_height(o.x(), o.y()))) {
    throw RaycastError("raycast_scan: sensor pose is not above the ground surface");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  PointCloud cloud;
  cloud.seed = seed;
  cloud.points.reserve(lidar.beam_count());
  cloud.sources.reserve(lidar.beam_count());
  const int az_count = lidar.azimuth_count();
  for (double el : lidar.elevations) {
    const double ce = std::cos(el), se = std::sin(el);
    for (int a = 0; a < az_count; ++a) {
      const double az = -kPi + lidar.azimuth_offset + a * lidar.azimuth_step;
      const Vec3 dir_sensor(std::cos(az) * ce, std::sin(az) * ce, se);
      const Vec3 dir_world = pose.rotation * dir_sensor;
      const auto hit = cast_ray(scene, o, dir_world, 0.0, lidar.max_range);
      if (!hit || hit->range < lidar.min_range) continue;
      double r = hit->range;
      if (lidar.range_noise_sigma > 0.0) r += lidar.range_noise_sigma * noise(rng);
      if (r <= 0.0) continue;
      cloud.push_back(r * dir_sensor, hit->kind);
    }
  }
  return cloud;
}

TrajectoryParams TrajectoryParams::roadway() { return TrajectoryParams{}; }

TrajectoryParams TrajectoryParams::offroad() {
  TrajectoryParams p;
  p.kind = TrajectoryKind::kOffroad;
  p.frames = 21;
  p.yaw_rate = deg2rad(30.0);
  return p;
}

Trajectory generate_trajectory(const TrajectoryParams& p, const Scene& scene) {
  if (p.frames < 2 || !(p.rate_hz > 0.0) || !(p.sensor_height > 0.0)) {
    throw std::invalid_argument("TrajectoryParams: need >= 2 frames, positive rate and sensor height");
  }
  Trajectory traj;
  const double dt = 1.0 / p.rate_hz;
  Vec2 xy = p.start;
  double yaw = p.start_yaw;
  for (int k = 0; k < p.frames; ++k) {
    const double z = scene.ground_height(xy.x(), xy.y()) + p.sensor_height;
    traj.poses.push_back({k * dt, Pose::from_xyz_yaw(xy.x(), xy.y(), z, yaw)});
    // heading integrates at mid-step so the path is the exact circular arc
    // chord for constant speed and yaw rate
    const double mid_yaw = yaw + 0.5 * p.yaw_rate * dt;
    xy += p.speed * dt * Vec2(std::cos(mid_yaw), std::sin(mid_yaw));
    yaw += p.yaw_rate * dt;
  }
  return traj;
}

namespace {
nlohmann::json vec2_json(const Vec2& v) { return nlohmann::json::array({v.x(), v.y()}); }
Vec2 vec2_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
}  // namespace

void to_json(nlohmann::json& j, const Scene& s) {
  j = nlohmann::json::object();
  j["name"] = s.name;
  if (s.seed) j["seed"] = *s.seed;
  if (const auto* f = std::get_if<FlatGround>(&s.ground)) {
    j["ground"] = {{"type", "flat"}, {"height_m", f->height}};
  } else {
    const auto& h = std::get<Heightfield>(s.ground);
    nlohmann::json waves = nlohmann::json::array();
    for (const auto& w : h.waves) {
      waves.push_back({{"amplitude_m", w.amplitude},
                       {"wavevector_rad_per_m", vec2_json(w.wavevector)},
                       {"phase_rad", w.phase}});
    }
    j["ground"] = {{"type", "heightfield"},
                   {"center_m", vec2_json(h.center)},
                   {"half_extent_m", h.half_extent},
                   {"waves", waves}};
  }
  j["walls"] = nlohmann::json::array();
  for (const Wall& w : s.walls) {
    j["walls"].push_back({{"start_m", vec2_json(w.start)},
                          {"end_m", vec2_json(w.end)},
                          {"z_min_m", w.z_min},
                          {"z_max_m", w.z_max}});
  }
  j["cylinders"] = nlohmann::json::array();
  for (const Cylinder& c : s.cylinders) {
    j["cylinders"].push_back({{"center_m", vec2_json(c.center)},
                              {"radius_m", c.radius},
                              {"z_min_m", c.z_min},
                              {"z_max_m", c.z_max}});
  }
}

void from_json(const nlohmann::json& j, Scene& s) {
  s = Scene{};
  s.name = j.value("name", std::string{});
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  const auto& g = j.at("ground");
  const std::string type = g.at("type").get<std::string>();
  if (type == "flat") {
    s.ground = FlatGround{g.value("height_m", 0.0)};
  } else if (type == "heightfield") {
    Heightfield h;
    h.center = vec2_from(g.at("center_m"));
    h.half_extent = g.at("half_extent_m").get<double>();
    for (const auto& w : g.at("waves")) {
      h.waves.push_back({w.at("amplitude_m").get<double>(), vec2_from(w.at("wavevector_rad_per_m")),
                         w.at("phase_rad").get<double>()});
    }
    s.ground = h;
  } else {
    throw std::invalid_argument("scene ground type must be 'flat' or 'heightfield'");
  }
  for (const auto& w : j.value("walls", nlohmann::json::array())) {
    s.walls.push_back({vec2_from(w.at("start_m")), vec2_from(w.at("end_m")), w.at("z_min_m").get<double>(),
                       w.at("z_max_m").get<double>()});
  }
  for (const auto& c : j.value("cylinders", nlohmann::json::array())) {
    s.cylinders.push_back({vec2_from(c.at("center_m")), c.at("radius_m").get<double>(),
                           c.at("z_min_m").get<double>(), c.at("z_max_m").get<double>()});
  }
  s.validate();
}

}  // namespace shadowgrid::sim
