#pragma once

// Monte Carlo experiment runner and summary statistics.
//
// An experiment places scan pairs at evenly spaced locations along a
// simulated trajectory, draws independent range noise for every trial and
// registers each pair with one of three methods. Summaries compare the
// spread of the actual errors with the solver's own predicted sigma.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "shadowgrid/scan_match.hpp"
#include "shadowgrid/sim.hpp"
#include "shadowgrid/spherical_grid.hpp"

namespace shadowgrid::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Method { kSphericalShadow, kCartesian, kCartesianNoGround };
enum class SceneKind { kRoadway, kOffroad };

std::string to_string(Method m);
std::string to_string(SceneKind k);
/// Throw ConfigError on unknown names.
Method method_from_string(const std::string& s);
SceneKind scene_from_string(const std::string& s);

struct CartesianConfig {
  double edge = 3.0;              // meters
  double ground_tolerance = 0.3;  // meters above the true ground that count as ground
  std::size_t min_points = 50;    // per voxel in both scans
};

struct ExperimentConfig {
  SceneKind scene = SceneKind::kRoadway;
  sim::RoadwayParams roadway;
  sim::OffroadParams offroad;
  std::uint64_t terrain_seed = 7;
  sim::LidarModel lidar = sim::LidarModel::hdl64e_like();
  sim::TrajectoryParams trajectory = sim::TrajectoryParams::roadway();
  Method method = Method::kSphericalShadow;
  int locations = 10;
  int trials_per_location = 3;
  std::uint64_t master_seed = 1;
  WedgeGridConfig grid;
  MatchConfig match;
  CartesianConfig cartesian;
  /// Raise the lower grid limit to where the secondary scan still sees the
  /// ground under the primary's lowest beam (see near_field_limit).
  bool near_field_cut = true;
  int workers = 0;  // 0 picks the hardware concurrency

  /// Throws ConfigError.
  void validate() const;

  int total_trials() const { return locations * trials_per_location; }

  /// Roadway 10 locations x 3 trials, offroad 20 x 3.
  static ExperimentConfig desk(SceneKind scene, Method method);
  /// Roadway 40 x 3, offroad 20 x 6.
  static ExperimentConfig full_scale(SceneKind scene, Method method);
};

/// Wedge grid whose elevation limits sit half a channel spacing outside the
/// outermost beams of `lidar`.
WedgeGridConfig grid_for_lidar(const sim::LidarModel& lidar, WedgeGridConfig base = {});

/// Elevation at which the primary sees the ground ring of the secondary's
/// lowest beam after the secondary has travelled `travel` meters forward
/// over flat ground. Below it the primary has returns the secondary cannot
/// reproduce, and the edge of the field of view acts like a shadow edge
/// that moves with the sensor. Returns the lowest beam elevation when that
/// beam does not point down.
double near_field_limit(const sim::LidarModel& lidar, double sensor_height, double travel);

/// cfg.grid with the near-field cut applied when enabled.
WedgeGridConfig effective_grid(const ExperimentConfig& cfg);

void to_json(nlohmann::json& j, const ExperimentConfig& cfg);
/// Missing keys keep their defaults. Throws ConfigError.
void from_json(const nlohmann::json& j, ExperimentConfig& cfg);

/// Throws ConfigError for malformed files, IoError when unreadable.
ExperimentConfig load_config(const std::filesystem::path& path);
/// 16 hex digits, FNV-1a over the canonical JSON form.
std::string config_hash(const ExperimentConfig& cfg);

std::uint64_t trial_seed(std::uint64_t master, int location, int trial);
/// Noise seed of the primary (scan 0) or secondary (scan 1) sweep of a trial.
std::uint64_t scan_seed(std::uint64_t trial_seed, int scan);

struct TrialRecord {
  int location = 0;
  int trial = 0;
  Vec6 truth = Vec6::Zero();
  Vec6 estimate = Vec6::Zero();
  Vec6 error = Vec6::Zero();            // estimate - truth
  Vec6 predicted_sigma = Vec6::Zero();
  bool converged = false;
  bool rejected = false;
  std::string reject_reason;
  int iterations = 0;
  std::size_t voxels_used = 0;
  double seconds = 0.0;                  // grid construction + matching
};

/// Index of the first pose of the pair used at `location`.
int location_frame(const ExperimentConfig& cfg, int location, int pair_count);

/// One scan pair registered with cfg.method. Never throws for solver
/// failures; they become rejected records.
TrialRecord run_trial(const ExperimentConfig& cfg, const sim::Scene& scene, const Pose& primary_pose,
                      const Pose& secondary_pose, int location, int trial);

/// Every trial of the experiment, ordered by (location, trial). Runs on a
/// bounded pool of cfg.workers threads; results do not depend on it.
std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg);

struct SummaryTable {
  Vec6 actual_sigma = Vec6::Zero();
  Vec6 predicted_sigma = Vec6::Zero();
  Vec6 mean_error = Vec6::Zero();
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t total = 0;

  Vec6 ratio() const { return actual_sigma.cwiseQuotient(predicted_sigma); }
};

/// Throws InsufficientDataError with fewer than two accepted records.
SummaryTable summarize(const std::vector<TrialRecord>& records);

extern const std::array<const char*, 6> kAxisNames;

/// Aligned text table in cm and deg with Actual and Predicted rows.
void write_text_table(std::ostream& out, const SummaryTable& table, const std::string& title);
/// Summary CSV with the config hash and master seed in comment lines.
void write_summary_csv(std::ostream& out, const SummaryTable& table, const std::string& hash, std::uint64_t seed);
/// Grouped bar chart of actual vs predicted sigma per axis, in SVG.
void write_svg_chart(std::ostream& out, const SummaryTable& table, const std::string& title);

void write_records_csv(std::ostream& out, const std::vector<TrialRecord>& records);
/// Throws IoError on malformed input.
std::vector<TrialRecord> read_records_csv(std::istream& in);

}  // namespace shadowgrid::harness
