#include "shadowgrid/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "shadowgrid/cartesian_grid.hpp"
#include "shadowgrid/ground_removal.hpp"
#include "shadowgrid/point_cloud_io.hpp"

namespace shadowgrid::harness {

using nlohmann::json;

const std::array<const char*, 6> kAxisNames = {"x", "y", "z", "roll", "pitch", "yaw"};

std::string to_string(Method m) {
  switch (m) {
    case Method::kSphericalShadow: return "spherical_shadow";
    case Method::kCartesian: return "cartesian";
    case Method::kCartesianNoGround: return "cartesian_no_ground";
  }
  return "unknown";
}

std::string to_string(SceneKind k) { return k == SceneKind::kRoadway ? "roadway" : "offroad"; }

Method method_from_string(const std::string& s) {
  for (Method m : {Method::kSphericalShadow, Method::kCartesian, Method::kCartesianNoGround}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown method '" + s + "' (spherical_shadow, cartesian, cartesian_no_ground)");
}

SceneKind scene_from_string(const std::string& s) {
  if (s == "roadway") return SceneKind::kRoadway;
  if (s == "offroad") return SceneKind::kOffroad;
  throw ConfigError("unknown scene '" + s + "' (roadway, offroad)");
}

void ExperimentConfig::validate() const {
  if (locations < 1 || trials_per_location < 1) throw ConfigError("locations and trials per location must be >= 1");
  if (workers < 0) throw ConfigError("workers must be >= 0");
  if (!(cartesian.edge > 0.0) || !(cartesian.ground_tolerance >= 0.0) || cartesian.min_points < 2) {
    throw ConfigError("cartesian: edge > 0, ground tolerance >= 0 and min points >= 2 required");
  }
  if (trajectory.frames < 2) throw ConfigError("trajectory needs at least two frames");
  if (locations > trajectory.frames - 1) {
    throw ConfigError("more locations (" + std::to_string(locations) + ") than frame pairs (" +
                      std::to_string(trajectory.frames - 1) + ")");
  }
  try {
    lidar.validate();
    grid.validate();
    match.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

WedgeGridConfig grid_for_lidar(const sim::LidarModel& lidar, WedgeGridConfig base) {
  const auto& el = lidar.elevations;
  if (el.size() < 2) return base;
  base.elevation_min = el.front() - 0.5 * (el[1] - el[0]);
  base.elevation_max = el.back() + 0.5 * (el.back() - el[el.size() - 2]);
  return base;
}

double near_field_limit(const sim::LidarModel& lidar, double sensor_height, double travel) {
  const double lowest = lidar.elevations.front();
  if (lowest >= 0.0 || sensor_height <= 0.0) return lowest;
  const double ring = sensor_height / std::tan(-lowest);
  return -std::atan(sensor_height / (ring + std::max(travel, 0.0)));
}

WedgeGridConfig effective_grid(const ExperimentConfig& cfg) {
  WedgeGridConfig g = cfg.grid;
  if (cfg.near_field_cut) {
    const double travel = cfg.trajectory.speed / cfg.trajectory.rate_hz;
    g.elevation_min = std::max(g.elevation_min, near_field_limit(cfg.lidar, cfg.trajectory.sensor_height, travel));
  }
  return g;
}

namespace {

ExperimentConfig preset(SceneKind scene, Method method, int locations, int trials) {
  ExperimentConfig cfg;
  cfg.scene = scene;
  cfg.method = method;
  cfg.trajectory = scene == SceneKind::kRoadway ? sim::TrajectoryParams::roadway() : sim::TrajectoryParams::offroad();
  cfg.locations = locations;
  cfg.trials_per_location = trials;
  cfg.grid = grid_for_lidar(cfg.lidar);
  return cfg;
}

}  // namespace

// Offroad has only 20 pairs; every one is used so no part of the terrain is
// left out of the sample.
ExperimentConfig ExperimentConfig::desk(SceneKind scene, Method method) {
  return scene == SceneKind::kRoadway ? preset(scene, method, 10, 3) : preset(scene, method, 20, 3);
}

ExperimentConfig ExperimentConfig::full_scale(SceneKind scene, Method method) {
  return scene == SceneKind::kRoadway ? preset(scene, method, 40, 3) : preset(scene, method, 20, 6);
}

// ---- JSON ----

namespace {

double deg_of(double rad) { return rad2deg(rad); }

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_deg(const json& j, const char* key, double& rad) {
  if (j.contains(key)) rad = deg2rad(j.at(key).get<double>());
}

json lidar_json(const sim::LidarModel& l) {
  json el = json::array();
  for (double e : l.elevations) el.push_back(deg_of(e));
  return {{"elevations_deg", el},
          {"azimuth_step_deg", deg_of(l.azimuth_step)},
          {"azimuth_offset_deg", deg_of(l.azimuth_offset)},
          {"min_range_m", l.min_range},
          {"max_range_m", l.max_range},
          {"range_noise_sigma_m", l.range_noise_sigma}};
}

void lidar_from(const json& j, sim::LidarModel& l) {
  if (j.contains("preset")) {
    const auto name = j.at("preset").get<std::string>();
    if (name == "hdl64e_like") l = sim::LidarModel::hdl64e_like();
    else if (name == "desk") l = sim::LidarModel::desk();
    else throw ConfigError("unknown lidar preset '" + name + "' (hdl64e_like, desk)");
  }
  if (j.contains("channels")) {
    const int n = j.at("channels").get<int>();
    double lo = -24.8, hi = 2.0, step = rad2deg(l.azimuth_step);
    read(j, "elevation_min_deg", lo);
    read(j, "elevation_max_deg", hi);
    read(j, "azimuth_step_deg", step);
    const double sigma = l.range_noise_sigma, max_range = l.max_range;
    l = sim::LidarModel::uniform(n, lo, hi, step, max_range, sigma);
  }
  if (j.contains("elevations_deg")) {
    l.elevations.clear();
    for (const auto& e : j.at("elevations_deg")) l.elevations.push_back(deg2rad(e.get<double>()));
  }
  read_deg(j, "azimuth_step_deg", l.azimuth_step);
  read_deg(j, "azimuth_offset_deg", l.azimuth_offset);
  read(j, "min_range_m", l.min_range);
  read(j, "max_range_m", l.max_range);
  read(j, "range_noise_sigma_m", l.range_noise_sigma);
}

json roadway_json(const sim::RoadwayParams& r) {
  return {{"column_count", r.column_count},       {"column_radius_m", r.column_radius},
          {"column_height_m", r.column_height},   {"column_spacing_m", r.column_spacing},
          {"column_line_offset_m", r.column_line_offset}, {"first_column_x_m", r.first_column_x},
          {"wall_offset_m", r.wall_offset},       {"wall_height_m", r.wall_height},
          {"wall_x_min_m", r.wall_x_min},         {"wall_x_max_m", r.wall_x_max}};
}

void roadway_from(const json& j, sim::RoadwayParams& r) {
  read(j, "column_count", r.column_count);
  read(j, "column_radius_m", r.column_radius);
  read(j, "column_height_m", r.column_height);
  read(j, "column_spacing_m", r.column_spacing);
  read(j, "column_line_offset_m", r.column_line_offset);
  read(j, "first_column_x_m", r.first_column_x);
  read(j, "wall_offset_m", r.wall_offset);
  read(j, "wall_height_m", r.wall_height);
  read(j, "wall_x_min_m", r.wall_x_min);
  read(j, "wall_x_max_m", r.wall_x_max);
}

json offroad_json(const sim::OffroadParams& o) {
  return {{"wave_count", o.wave_count},
          {"wavelength_min_m", o.wavelength_min},
          {"wavelength_max_m", o.wavelength_max},
          {"relief_amplitude_m", o.relief_amplitude},
          {"half_extent_m", o.half_extent}};
}

void offroad_from(const json& j, sim::OffroadParams& o) {
  read(j, "wave_count", o.wave_count);
  read(j, "wavelength_min_m", o.wavelength_min);
  read(j, "wavelength_max_m", o.wavelength_max);
  read(j, "relief_amplitude_m", o.relief_amplitude);
  read(j, "half_extent_m", o.half_extent);
}

json trajectory_json(const sim::TrajectoryParams& t) {
  return {{"frames", t.frames},
          {"rate_hz", t.rate_hz},
          {"speed_m_per_s", t.speed},
          {"yaw_rate_deg_per_s", deg_of(t.yaw_rate)},
          {"sensor_height_m", t.sensor_height},
          {"start_m", {t.start.x(), t.start.y()}},
          {"start_yaw_deg", deg_of(t.start_yaw)}};
}

void trajectory_from(const json& j, sim::TrajectoryParams& t) {
  read(j, "frames", t.frames);
  read(j, "rate_hz", t.rate_hz);
  read(j, "speed_m_per_s", t.speed);
  read_deg(j, "yaw_rate_deg_per_s", t.yaw_rate);
  read(j, "sensor_height_m", t.sensor_height);
  if (j.contains("start_m")) t.start = {j.at("start_m").at(0).get<double>(), j.at("start_m").at(1).get<double>()};
  read_deg(j, "start_yaw_deg", t.start_yaw);
}

json grid_json(const WedgeGridConfig& g) {
  return {{"azimuth_bin_deg", deg_of(g.azimuth_bin)},
          {"elevation_bin_deg", deg_of(g.elevation_bin)},
          {"elevation_min_deg", deg_of(g.elevation_min)},
          {"elevation_max_deg", deg_of(g.elevation_max)},
          {"jump_threshold_m", g.jump_threshold},
          {"min_cluster_points", g.min_cluster},
          {"max_pad_m", g.max_pad}};
}

void grid_from(const json& j, WedgeGridConfig& g) {
  read_deg(j, "azimuth_bin_deg", g.azimuth_bin);
  read_deg(j, "elevation_bin_deg", g.elevation_bin);
  read_deg(j, "elevation_min_deg", g.elevation_min);
  read_deg(j, "elevation_max_deg", g.elevation_max);
  read(j, "jump_threshold_m", g.jump_threshold);
  read(j, "min_cluster_points", g.min_cluster);
  read(j, "max_pad_m", g.max_pad);
}

json match_json(const MatchConfig& m) {
  return {{"max_iterations", m.max_iterations},
          {"step_tolerance", m.step_tolerance},
          {"min_points_per_voxel", m.min_points_per_voxel},
          {"divergence_radius_m", m.divergence_radius},
          {"voxel_condition_limit", m.voxel_condition_limit},
          {"normal_condition_limit", m.normal_condition_limit},
          {"covariance_floor_m2", m.covariance_floor},
          {"prune_extended_axes", m.prune_extended_axes},
          {"settle_limit_cycles", m.settle_limit_cycles}};
}

void match_from(const json& j, MatchConfig& m) {
  read(j, "max_iterations", m.max_iterations);
  read(j, "step_tolerance", m.step_tolerance);
  read(j, "min_points_per_voxel", m.min_points_per_voxel);
  read(j, "divergence_radius_m", m.divergence_radius);
  read(j, "voxel_condition_limit", m.voxel_condition_limit);
  read(j, "normal_condition_limit", m.normal_condition_limit);
  read(j, "covariance_floor_m2", m.covariance_floor);
  read(j, "prune_extended_axes", m.prune_extended_axes);
  read(j, "settle_limit_cycles", m.settle_limit_cycles);
}

}  // namespace

void to_json(json& j, const ExperimentConfig& c) {
  j = {{"scene", to_string(c.scene)},
       {"roadway", roadway_json(c.roadway)},
       {"offroad", offroad_json(c.offroad)},
       {"terrain_seed", c.terrain_seed},
       {"lidar", lidar_json(c.lidar)},
       {"trajectory", trajectory_json(c.trajectory)},
       {"method", to_string(c.method)},
       {"locations", c.locations},
       {"trials_per_location", c.trials_per_location},
       {"master_seed", c.master_seed},
       {"grid", grid_json(c.grid)},
       {"match", match_json(c.match)},
       {"cartesian",
        {{"edge_m", c.cartesian.edge},
         {"ground_tolerance_m", c.cartesian.ground_tolerance},
         {"min_points_per_voxel", c.cartesian.min_points}}},
       {"near_field_cut", c.near_field_cut},
       {"workers", c.workers}};
}

void from_json(const json& j, ExperimentConfig& c) {
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    const SceneKind scene = j.contains("scene") ? scene_from_string(j.at("scene").get<std::string>()) : c.scene;
    const Method method = j.contains("method") ? method_from_string(j.at("method").get<std::string>()) : c.method;
    const bool scale_full = j.value("preset", std::string("desk")) == "full";
    if (j.contains("preset") && !scale_full && j.at("preset") != "desk") {
      throw ConfigError("preset must be 'desk' or 'full'");
    }
    c = scale_full ? ExperimentConfig::full_scale(scene, method) : ExperimentConfig::desk(scene, method);
    if (j.contains("roadway")) roadway_from(j.at("roadway"), c.roadway);
    if (j.contains("offroad")) offroad_from(j.at("offroad"), c.offroad);
    read(j, "terrain_seed", c.terrain_seed);
    if (j.contains("lidar")) {
      lidar_from(j.at("lidar"), c.lidar);
      c.grid = grid_for_lidar(c.lidar, c.grid);
    }
    if (j.contains("trajectory")) trajectory_from(j.at("trajectory"), c.trajectory);
    read(j, "locations", c.locations);
    read(j, "trials_per_location", c.trials_per_location);
    read(j, "master_seed", c.master_seed);
    if (j.contains("grid")) grid_from(j.at("grid"), c.grid);
    if (j.contains("match")) match_from(j.at("match"), c.match);
    if (j.contains("cartesian")) {
      const auto& cj = j.at("cartesian");
      read(cj, "edge_m", c.cartesian.edge);
      read(cj, "ground_tolerance_m", c.cartesian.ground_tolerance);
      read(cj, "min_points_per_voxel", c.cartesian.min_points);
    }
    read(j, "near_field_cut", c.near_field_cut);
    read(j, "workers", c.workers);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  ExperimentConfig cfg;
  try {
    from_json(j, cfg);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- trials ----

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

sim::Scene make_scene(const ExperimentConfig& cfg) {
  return cfg.scene == SceneKind::kRoadway ? sim::build_roadway_scene(cfg.roadway)
                                          : sim::build_offroad_scene(cfg.offroad, cfg.terrain_seed);
}

// Ground height in the sensor frame of `pose`. Poses only carry yaw (the
// sensor is gimballed), so sensor z is world z shifted by the sensor height.
GroundHeight sensor_ground(const sim::Scene& scene, const Pose& pose) {
  return [&scene, pose](double x, double y) {
    const Vec3 w = pose.to_world(Vec3(x, y, 0.0));
    return scene.ground_height(w.x(), w.y()) - pose.position.z();
  };
}

Vec3 cartesian_anchor(const ExperimentConfig& cfg, const sim::Scene& scene, const Pose& pose) {
  const double edge = cfg.cartesian.edge;
  const double ground = scene.ground_height(pose.position.x(), pose.position.y()) - pose.position.z();
  double y = -0.5 * edge;
  if (cfg.scene == SceneKind::kRoadway) y = anchor_bisecting(cfg.roadway.wall_offset - pose.position.y(), edge);
  return {0.0, y, anchor_bisecting(ground, edge)};
}

SolutionReport solve(const ExperimentConfig& cfg, const sim::Scene& scene, const Pose& primary_pose,
                     const Pose& secondary_pose, const PointCloud& primary, const PointCloud& secondary) {
  if (cfg.method == Method::kSphericalShadow) {
    auto grid = std::make_shared<SphericalGrid>(build_shadow_filtered_grid(primary, effective_grid(cfg)));
    if (grid->underconstrained()) {
      throw MatchError(MatchError::Kind::kInsufficientVoxels, "fewer than six radial voxels");
    }
    return match(make_reference(grid, primary), secondary, RigidTransform::identity(), cfg.match);
  }
  MatchConfig mc = cfg.match;
  mc.min_points_per_voxel = cfg.cartesian.min_points;
  const Vec3 anchor = cartesian_anchor(cfg, scene, primary_pose);
  if (cfg.method == Method::kCartesianNoGround) {
    const double tol = cfg.cartesian.ground_tolerance;
    const PointCloud p = remove_ground_plane(primary, sensor_ground(scene, primary_pose), tol);
    const PointCloud s = remove_ground_plane(secondary, sensor_ground(scene, secondary_pose), tol);
    auto grid = std::make_shared<CartesianGrid>(p, cfg.cartesian.edge, anchor);
    return match(make_reference(grid, p), s, RigidTransform::identity(), mc);
  }
  auto grid = std::make_shared<CartesianGrid>(primary, cfg.cartesian.edge, anchor);
  return match(make_reference(grid, primary), secondary, RigidTransform::identity(), mc);
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t master, int location, int trial) {
  std::uint64_t h = splitmix(master);
  h = splitmix(h ^ static_cast<std::uint64_t>(location));
  return splitmix(h ^ static_cast<std::uint64_t>(trial));
}

std::uint64_t scan_seed(std::uint64_t trial_seed, int scan) {
  return splitmix(trial_seed ^ static_cast<std::uint64_t>(scan + 1));
}

int location_frame(const ExperimentConfig& cfg, int location, int pair_count) {
  return static_cast<int>(static_cast<long long>(location) * pair_count / cfg.locations);
}

TrialRecord run_trial(const ExperimentConfig& cfg, const sim::Scene& scene, const Pose& primary_pose,
                      const Pose& secondary_pose, int location, int trial) {
  TrialRecord rec;
  rec.location = location;
  rec.trial = trial;
  rec.truth = relative_transform(primary_pose, secondary_pose).state();

  const std::uint64_t seed = trial_seed(cfg.master_seed, location, trial);
  const PointCloud primary = sim::raycast_scan(scene, cfg.lidar, primary_pose, scan_seed(seed, 0));
  const PointCloud secondary = sim::raycast_scan(scene, cfg.lidar, secondary_pose, scan_seed(seed, 1));

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const SolutionReport r = solve(cfg, scene, primary_pose, secondary_pose, primary, secondary);
    rec.estimate = r.state;
    rec.predicted_sigma = predicted_sigma(r);
    rec.converged = r.converged;
    rec.iterations = r.iterations;
    rec.voxels_used = r.voxels_used;
    if (!r.converged) {
      rec.rejected = true;
      rec.reject_reason = "max_iterations";
    }
  } catch (const MatchError& e) {
    rec.rejected = true;
    rec.reject_reason = to_string(e.kind());
  }
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rec.error = rec.estimate - rec.truth;
  return rec;
}

std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const sim::Scene scene = make_scene(cfg);
  const sim::Trajectory traj = sim::generate_trajectory(cfg.trajectory, scene);
  const int pairs = static_cast<int>(traj.poses.size()) - 1;

  const int total = cfg.total_trials();
  std::vector<TrialRecord> records(static_cast<std::size_t>(total));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < total; k = next++) {
      const int loc = k / cfg.trials_per_location;
      const int trial = k % cfg.trials_per_location;
      const int f = location_frame(cfg, loc, pairs);
      records[static_cast<std::size_t>(k)] =
          run_trial(cfg, scene, traj.poses[f].pose, traj.poses[f + 1].pose, loc, trial);
    }
  };

  int n = cfg.workers > 0 ? cfg.workers : static_cast<int>(std::thread::hardware_concurrency());
  n = std::clamp(n, 1, total);
  if (n == 1) {
    worker();
    return records;
  }
  std::vector<std::jthread> pool;
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  pool.clear();  // joins
  return records;
}

SummaryTable summarize(const std::vector<TrialRecord>& records) {
  SummaryTable t;
  t.total = records.size();
  Vec6 sum = Vec6::Zero(), psum = Vec6::Zero();
  for (const auto& r : records) {
    if (r.rejected || !r.converged) continue;
    sum += r.error;
    psum += r.predicted_sigma;
    ++t.accepted;
  }
  t.rejected = t.total - t.accepted;
  if (t.accepted < 2) {
    throw InsufficientDataError("summary needs at least two accepted trials, got " + std::to_string(t.accepted));
  }
  const double n = static_cast<double>(t.accepted);
  t.mean_error = sum / n;
  t.predicted_sigma = psum / n;
  Vec6 ss = Vec6::Zero();
  for (const auto& r : records) {
    if (r.rejected || !r.converged) continue;
    const Vec6 d = r.error - t.mean_error;
    ss += d.cwiseProduct(d);
  }
  t.actual_sigma = (ss / (n - 1.0)).cwiseSqrt();
  return t;
}

// ---- reports ----

namespace {

// Display units: centimeters for translation, degrees for rotation.
double display(int axis, double v) { return axis < 3 ? 100.0 * v : rad2deg(v); }
const char* unit(int axis) { return axis < 3 ? "cm" : "deg"; }

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw IoError("records: bad number '" + s + "'");
  return v;
}

long long parse_int(const std::string& s) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw IoError("records: bad integer '" + s + "'");
  return v;
}

}  // namespace

void write_text_table(std::ostream& out, const SummaryTable& t, const std::string& title) {
  char buf[160];
  out << title << '\n';
  std::snprintf(buf, sizeof buf, "%-10s", "");
  out << buf;
  for (int a = 0; a < 6; ++a) {
    std::snprintf(buf, sizeof buf, "%12s", (std::string(kAxisNames[a]) + " (" + unit(a) + ")").c_str());
    out << buf;
  }
  out << '\n';
  const std::pair<const char*, const Vec6*> rows[] = {
      {"Actual", &t.actual_sigma}, {"Predicted", &t.predicted_sigma}, {"Mean err", &t.mean_error}};
  for (const auto& [name, v] : rows) {
    std::snprintf(buf, sizeof buf, "%-10s", name);
    out << buf;
    for (int a = 0; a < 6; ++a) {
      std::snprintf(buf, sizeof buf, "%12.4f", display(a, (*v)(a)));
      out << buf;
    }
    out << '\n';
  }
  std::snprintf(buf, sizeof buf, "%-10s", "Ratio");
  out << buf;
  for (int a = 0; a < 6; ++a) {
    std::snprintf(buf, sizeof buf, "%12.3f", t.ratio()(a));
    out << buf;
  }
  out << '\n';
  out << "* " << t.rejected << " of " << t.total << " trials rejected\n";
}

void write_summary_csv(std::ostream& out, const SummaryTable& t, const std::string& hash, std::uint64_t seed) {
  out << "# config_hash: " << hash << '\n';
  out << "# master_seed: " << seed << '\n';
  out << "# accepted: " << t.accepted << '\n';
  out << "# rejected: " << t.rejected << '\n';
  out << "# total: " << t.total << '\n';
  out << "row,x_m,y_m,z_m,roll_rad,pitch_rad,yaw_rad\n";
  const std::pair<const char*, Vec6> rows[] = {{"actual_sigma", t.actual_sigma},
                                               {"predicted_sigma", t.predicted_sigma},
                                               {"mean_error", t.mean_error},
                                               {"ratio", t.ratio()}};
  for (const auto& [name, v] : rows) {
    out << name;
    for (int a = 0; a < 6; ++a) out << ',' << shortest(v(a));
    out << '\n';
  }
}

void write_svg_chart(std::ostream& out, const SummaryTable& t, const std::string& title) {
  // one panel per axis, each scaled to its own larger bar
  const int panel_w = 120, panel_h = 220, top = 50, base = top + panel_h;
  const int width = 6 * panel_w + 40, height = base + 70;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" viewBox=\"0 0 %d %d\" "
                "font-family=\"sans-serif\" font-size=\"12\">\n",
                width, height, width, height);
  out << buf;
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::string safe;
  for (char c : title) {
    if (c == '<') safe += "&lt;";
    else if (c == '>') safe += "&gt;";
    else if (c == '&') safe += "&amp;";
    else safe += c;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"20\" y=\"24\" font-size=\"15\">%s</text>\n", safe.c_str());
  out << buf;
  for (int a = 0; a < 6; ++a) {
    const double act = display(a, t.actual_sigma(a));
    const double pred = display(a, t.predicted_sigma(a));
    const double scale = std::max({act, pred, 1e-300});
    const int x0 = 20 + a * panel_w;
    const struct { double v; int dx; const char* fill; } bars[] = {{act, 20, "#c0504d"}, {pred, 62, "#4f81bd"}};
    for (const auto& b : bars) {
      const int h = static_cast<int>(std::lround(b.v / scale * (panel_h - 20)));
      std::snprintf(buf, sizeof buf, "<rect x=\"%d\" y=\"%d\" width=\"36\" height=\"%d\" fill=\"%s\"/>\n",
                    x0 + b.dx, base - h, h, b.fill);
      out << buf;
      std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\" font-size=\"10\">%.3g</text>\n",
                    x0 + b.dx + 18, base - h - 4, b.v);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">%s (%s)</text>\n",
                  x0 + 58, base + 18, kAxisNames[a], unit(a));
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "<line x1=\"20\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n", base,
                width - 20, base);
  out << buf;
  std::snprintf(buf, sizeof buf,
                "<rect x=\"20\" y=\"%d\" width=\"12\" height=\"12\" fill=\"#c0504d\"/>"
                "<text x=\"38\" y=\"%d\">actual</text>"
                "<rect x=\"100\" y=\"%d\" width=\"12\" height=\"12\" fill=\"#4f81bd\"/>"
                "<text x=\"118\" y=\"%d\">predicted</text>\n",
                base + 34, base + 45, base + 34, base + 45);
  out << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"240\" y=\"%d\">%zu of %zu trials rejected</text>\n", base + 45,
                t.rejected, t.total);
  out << buf;
  out << "</svg>\n";
}

namespace {

const char* const kVecFields[] = {"truth", "estimate", "error", "sigma"};

}  // namespace

void write_records_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << "location,trial,converged,rejected,reason,iterations,voxels_used,seconds";
  for (const char* f : kVecFields) {
    for (const char* a : kAxisNames) out << ',' << f << '_' << a;
  }
  out << '\n';
  for (const auto& r : records) {
    std::string reason = r.reject_reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    out << r.location << ',' << r.trial << ',' << int(r.converged) << ',' << int(r.rejected) << ',' << reason << ','
        << r.iterations << ',' << r.voxels_used << ',' << shortest(r.seconds);
    for (const Vec6* v : {&r.truth, &r.estimate, &r.error, &r.predicted_sigma}) {
      for (int a = 0; a < 6; ++a) out << ',' << shortest((*v)(a));
    }
    out << '\n';
  }
}

std::vector<TrialRecord> read_records_csv(std::istream& in) {
  std::vector<TrialRecord> out;
  std::string line;
  if (!std::getline(in, line) || line.rfind("location,trial,", 0) != 0) {
    throw IoError("records: missing header");
  }
  constexpr std::size_t kFields = 8 + 24;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != kFields) {
      throw IoError("records line " + std::to_string(line_no) + ": expected " + std::to_string(kFields) +
                    " fields, got " + std::to_string(f.size()));
    }
    TrialRecord r;
    r.location = static_cast<int>(parse_int(f[0]));
    r.trial = static_cast<int>(parse_int(f[1]));
    r.converged = parse_int(f[2]) != 0;
    r.rejected = parse_int(f[3]) != 0;
    r.reject_reason = f[4];
    r.iterations = static_cast<int>(parse_int(f[5]));
    r.voxels_used = static_cast<std::size_t>(parse_int(f[6]));
    r.seconds = parse_double(f[7]);
    Vec6* vecs[] = {&r.truth, &r.estimate, &r.error, &r.predicted_sigma};
    for (int v = 0; v < 4; ++v) {
      for (int a = 0; a < 6; ++a) (*vecs[v])(a) = parse_double(f[8 + 6 * v + a]);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace shadowgrid::harness
