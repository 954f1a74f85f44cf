// shadowgrid command line: simulate scan pairs, register point clouds, run
// Monte Carlo experiments and render their reports.
//
// Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 an
// experiment produced no accepted trials.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "shadowgrid/ground_removal.hpp"
#include "shadowgrid/harness.hpp"
#include "shadowgrid/point_cloud_io.hpp"
#include "shadowgrid/scan_match.hpp"
#include "shadowgrid/sim.hpp"

namespace fs = std::filesystem;
using namespace shadowgrid;
using harness::ConfigError;
using harness::ExperimentConfig;

namespace {

constexpr int kConfigError = 1;
constexpr int kIoError = 2;
constexpr int kNoAccepted = 3;

struct Common {
  std::string config_path;
  std::string scene = "roadway";
  std::string method = "spherical_shadow";
  bool full = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "experiment config (JSON)");
  cmd->add_option("--scene", c.scene, "roadway or offroad, when no config is given");
  cmd->add_option("--method", c.method, "spherical_shadow, cartesian or cartesian_no_ground");
  cmd->add_flag("--full", c.full, "full-scale preset instead of desk scale");
  cmd->add_option("--seed", c.seed, "override the master seed");
  cmd->add_option("-j,--workers", c.workers, "worker threads (0 = all cores)");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config_path.empty()) {
    cfg = harness::load_config(c.config_path);
  } else {
    const auto scene = harness::scene_from_string(c.scene);
    const auto method = harness::method_from_string(c.method);
    cfg = c.full ? ExperimentConfig::full_scale(scene, method) : ExperimentConfig::desk(scene, method);
  }
  if (c.seed) cfg.master_seed = *c.seed;
  if (c.workers) cfg.workers = *c.workers;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

void write_reports(const fs::path& dir, const std::vector<harness::TrialRecord>& records, const std::string& title,
                   const std::string& hash, std::uint64_t seed) {
  const auto table = harness::summarize(records);
  {
    auto out = open_out(dir / "summary.txt");
    harness::write_text_table(out, table, title);
  }
  {
    auto out = open_out(dir / "summary.csv");
    harness::write_summary_csv(out, table, hash, seed);
  }
  {
    auto out = open_out(dir / "chart.svg");
    harness::write_svg_chart(out, table, title);
  }
  harness::write_text_table(std::cout, table, title);
}

int cmd_simulate(const Common& c, int location, int trial, const std::string& out_dir, const std::string& format) {
  const ExperimentConfig cfg = resolve(c);
  const sim::Scene scene = cfg.scene == harness::SceneKind::kRoadway
                               ? sim::build_roadway_scene(cfg.roadway)
                               : sim::build_offroad_scene(cfg.offroad, cfg.terrain_seed);
  const auto traj = sim::generate_trajectory(cfg.trajectory, scene);
  const int pairs = static_cast<int>(traj.poses.size()) - 1;
  if (location < 0 || location >= cfg.locations) throw ConfigError("location out of range");
  const int f = harness::location_frame(cfg, location, pairs);
  const Pose& a = traj.poses[f].pose;
  const Pose& b = traj.poses[f + 1].pose;
  const std::uint64_t seed = harness::trial_seed(cfg.master_seed, location, trial);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  const std::string ext = "." + format;
  write_point_cloud(dir / ("primary" + ext), sim::raycast_scan(scene, cfg.lidar, a, harness::scan_seed(seed, 0)));
  write_point_cloud(dir / ("secondary" + ext), sim::raycast_scan(scene, cfg.lidar, b, harness::scan_seed(seed, 1)));
  nlohmann::json meta = {{"scene", scene},
                         {"frame", f},
                         {"seed", seed},
                         {"truth_state", std::vector<double>(6)}};
  const Vec6 truth = relative_transform(a, b).state();
  for (int i = 0; i < 6; ++i) meta["truth_state"][i] = truth(i);
  auto out = open_out(dir / "pair.json");
  out << meta.dump(2) << '\n';
  std::cout << "wrote " << (dir / ("primary" + ext)).string() << " and " << (dir / ("secondary" + ext)).string()
            << '\n';
  return 0;
}

int cmd_match(const std::string& primary_path, const std::string& secondary_path, const Common& c) {
  const ExperimentConfig cfg = resolve(c);
  const PointCloud p = read_point_cloud(primary_path);
  const PointCloud s = read_point_cloud(secondary_path);
  SolutionReport r;
  try {
    if (cfg.method == harness::Method::kSphericalShadow) {
      auto grid = std::make_shared<SphericalGrid>(build_shadow_filtered_grid(p, harness::effective_grid(cfg)));
      r = match(make_reference(grid, p), s, RigidTransform::identity(), cfg.match);
    } else {
      // Without ground truth, the Cartesian grid is anchored at the sensor
      // and ground removal falls back to a fitted plane.
      MatchConfig mc = cfg.match;
      mc.min_points_per_voxel = cfg.cartesian.min_points;
      const double e = cfg.cartesian.edge;
      const Vec3 anchor(0.0, -0.5 * e, -0.5 * e);
      PointCloud pp = p, ss = s;
      if (cfg.method == harness::Method::kCartesianNoGround) {
        pp = remove_ground_plane(p, estimate_ground_plane(p), cfg.cartesian.ground_tolerance);
        ss = remove_ground_plane(s, estimate_ground_plane(s), cfg.cartesian.ground_tolerance);
      }
      auto grid = std::make_shared<CartesianGrid>(pp, e, anchor);
      r = match(make_reference(grid, pp), ss, RigidTransform::identity(), mc);
    }
  } catch (const MatchError& e) {
    std::cerr << "match failed (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return kNoAccepted;
  }
  std::cout << serialize_report(r) << '\n';
  return r.converged ? 0 : kNoAccepted;
}

int cmd_montecarlo(const Common& c, const std::string& out_dir) {
  const ExperimentConfig cfg = resolve(c);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  {
    auto out = open_out(dir / "config.json");
    out << nlohmann::json(cfg).dump(2) << '\n';
  }
  const auto records = harness::run_experiment(cfg);
  {
    auto out = open_out(dir / "records.csv");
    harness::write_records_csv(out, records);
  }
  const std::string title = harness::to_string(cfg.scene) + " / " + harness::to_string(cfg.method);
  try {
    write_reports(dir, records, title, harness::config_hash(cfg), cfg.master_seed);
  } catch (const harness::InsufficientDataError& e) {
    std::cerr << e.what() << '\n';
    return kNoAccepted;
  }
  return 0;
}

int cmd_report(const std::string& records_path, const std::string& out_dir, const std::string& title,
               const std::string& config_path) {
  std::ifstream in(records_path);
  if (!in) throw IoError("cannot open " + records_path);
  const auto records = harness::read_records_csv(in);
  std::string hash = "unknown";
  std::uint64_t seed = 0;
  if (!config_path.empty()) {
    const auto cfg = harness::load_config(config_path);
    hash = harness::config_hash(cfg);
    seed = cfg.master_seed;
  }
  fs::create_directories(out_dir);
  try {
    write_reports(out_dir, records, title, hash, seed);
  } catch (const harness::InsufficientDataError& e) {
    std::cerr << e.what() << '\n';
    return kNoAccepted;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shadow-aware lidar scan matching experiments"};
  app.require_subcommand(1);

  Common sim_c, match_c, mc_c;
  int location = 0, trial = 0;
  std::string sim_out = "pair", format = "ply";
  auto* sim_cmd = app.add_subcommand("simulate", "emit one simulated scan pair");
  add_common(sim_cmd, sim_c);
  sim_cmd->add_option("--location", location, "location index along the trajectory");
  sim_cmd->add_option("--trial", trial, "trial index (selects the noise draw)");
  sim_cmd->add_option("-o,--out", sim_out, "output directory");
  sim_cmd->add_option("--format", format, "ply or csv")->check(CLI::IsMember({"ply", "csv"}));

  std::string primary, secondary;
  auto* match_cmd = app.add_subcommand("match", "register two point-cloud files");
  match_cmd->add_option("primary", primary, "primary scan (.ply or .csv)")->required();
  match_cmd->add_option("secondary", secondary, "secondary scan (.ply or .csv)")->required();
  add_common(match_cmd, match_c);

  std::string mc_out = "results";
  auto* mc_cmd = app.add_subcommand("montecarlo", "run a Monte Carlo experiment");
  add_common(mc_cmd, mc_c);
  mc_cmd->add_option("-o,--out", mc_out, "output directory");

  std::string records, report_out = "report", title = "experiment", report_config;
  auto* report_cmd = app.add_subcommand("report", "summarize a records file");
  report_cmd->add_option("records", records, "records.csv from montecarlo")->required();
  report_cmd->add_option("-o,--out", report_out, "output directory");
  report_cmd->add_option("--title", title, "table and chart title");
  report_cmd->add_option("-c,--config", report_config, "config used for the run (for hash and seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*sim_cmd) return cmd_simulate(sim_c, location, trial, sim_out, format);
    if (*match_cmd) return cmd_match(primary, secondary, match_c);
    if (*mc_cmd) return cmd_montecarlo(mc_c, mc_out);
    if (*report_cmd) return cmd_report(records, report_out, title, report_config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIoError;
  }
  return 0;
}
