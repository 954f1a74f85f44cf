#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "shadowgrid/harness.hpp"
#include "shadowgrid/point_cloud_io.hpp"

using namespace shadowgrid;
using namespace shadowgrid::harness;

namespace {

TrialRecord record_with_error(double e, bool rejected = false) {
  TrialRecord r;
  r.error = Vec6::Constant(e);
  r.predicted_sigma = Vec6::Constant(1.0);
  r.converged = !rejected;
  r.rejected = rejected;
  if (rejected) r.reject_reason = "max_iterations";
  return r;
}

ExperimentConfig small_config() {
  ExperimentConfig c = ExperimentConfig::desk(SceneKind::kRoadway, Method::kSphericalShadow);
  c.lidar = sim::LidarModel::desk();
  c.grid = grid_for_lidar(c.lidar, c.grid);
  c.locations = 2;
  c.trials_per_location = 2;
  c.workers = 1;
  return c;
}

void expect_records_equal(const TrialRecord& a, const TrialRecord& b) {
  EXPECT_EQ(a.location, b.location);
  EXPECT_EQ(a.trial, b.trial);
  EXPECT_EQ(a.truth, b.truth);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.error, b.error);
  EXPECT_EQ(a.predicted_sigma, b.predicted_sigma);
  EXPECT_EQ(a.converged, b.converged);
  EXPECT_EQ(a.rejected, b.rejected);
  EXPECT_EQ(a.reject_reason, b.reject_reason);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.voxels_used, b.voxels_used);
}

}  // namespace

TEST(Summarize, TwoSymmetricErrors) {
  const SummaryTable t = summarize({record_with_error(-1.0), record_with_error(1.0)});
  for (int a = 0; a < 6; ++a) {
    EXPECT_DOUBLE_EQ(t.actual_sigma(a), std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(t.mean_error(a), 0.0);
    EXPECT_DOUBLE_EQ(t.predicted_sigma(a), 1.0);
  }
}

TEST(Summarize, RejectedTrialsAreCountedNotUsed) {
  const SummaryTable t =
      summarize({record_with_error(-1.0), record_with_error(50.0, true), record_with_error(1.0)});
  EXPECT_EQ(t.accepted, 2u);
  EXPECT_EQ(t.rejected, 1u);
  EXPECT_EQ(t.total, 3u);
  EXPECT_DOUBLE_EQ(t.actual_sigma(0), std::sqrt(2.0));
}

TEST(Summarize, NeedsTwoAcceptedTrials) {
  EXPECT_THROW(summarize({}), InsufficientDataError);
  EXPECT_THROW(summarize({record_with_error(1.0), record_with_error(1.0, true)}), InsufficientDataError);
}

TEST(Seeds, DistinctStreams) {
  std::set<std::uint64_t> seen;
  for (int l = 0; l < 40; ++l) {
    for (int t = 0; t < 6; ++t) {
      const std::uint64_t s = trial_seed(1, l, t);
      EXPECT_TRUE(seen.insert(s).second);
      EXPECT_TRUE(seen.insert(scan_seed(s, 0)).second);
      EXPECT_TRUE(seen.insert(scan_seed(s, 1)).second);
    }
  }
  EXPECT_NE(trial_seed(1, 0, 0), trial_seed(2, 0, 0));
  EXPECT_EQ(trial_seed(5, 3, 2), trial_seed(5, 3, 2));
}

TEST(Config, Presets) {
  const auto road = ExperimentConfig::desk(SceneKind::kRoadway, Method::kCartesian);
  EXPECT_GE(road.total_trials(), 30);
  EXPECT_EQ(road.method, Method::kCartesian);
  const auto off = ExperimentConfig::desk(SceneKind::kOffroad, Method::kSphericalShadow);
  EXPECT_GE(off.total_trials(), 30);
  EXPECT_EQ(off.trajectory.frames, 21);
  EXPECT_EQ(ExperimentConfig::full_scale(SceneKind::kRoadway, Method::kCartesian).total_trials(), 120);
  EXPECT_EQ(ExperimentConfig::full_scale(SceneKind::kOffroad, Method::kCartesian).total_trials(), 120);
  EXPECT_NO_THROW(road.validate());
  EXPECT_NO_THROW(off.validate());
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c = ExperimentConfig::desk(SceneKind::kOffroad, Method::kCartesianNoGround);
  c.master_seed = 77;
  c.terrain_seed = 3;
  c.match.max_iterations = 31;
  c.cartesian.edge = 2.5;
  c.near_field_cut = false;
  const nlohmann::json j = c;
  const ExperimentConfig back = j.get<ExperimentConfig>();
  EXPECT_EQ(nlohmann::json(back).dump(), j.dump());
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(config_hash(c).size(), 16u);
  c.master_seed = 78;
  EXPECT_NE(config_hash(back), config_hash(c));
}

TEST(Config, Errors) {
  EXPECT_THROW(method_from_string("ndt"), ConfigError);
  EXPECT_THROW(scene_from_string("city"), ConfigError);
  EXPECT_THROW(nlohmann::json({{"scene", "city"}}).get<ExperimentConfig>(), ConfigError);
  EXPECT_THROW(nlohmann::json({{"locations", 0}}).get<ExperimentConfig>(), ConfigError);
  EXPECT_THROW(nlohmann::json({{"locations", 500}}).get<ExperimentConfig>(), ConfigError);
  EXPECT_THROW(nlohmann::json({{"preset", "huge"}}).get<ExperimentConfig>(), ConfigError);
  EXPECT_THROW(nlohmann::json({{"grid", {{"azimuth_bin_deg", 7.0}}}}).get<ExperimentConfig>(), ConfigError);

  const auto dir = std::filesystem::temp_directory_path();
  EXPECT_THROW(load_config(dir / "shadowgrid_no_such_config.json"), IoError);
  const auto bad = dir / "shadowgrid_bad_config.json";
  std::ofstream(bad) << "{ not json";
  EXPECT_THROW(load_config(bad), ConfigError);
  std::filesystem::remove(bad);
}

TEST(Config, NearFieldCut) {
  const auto lidar = sim::LidarModel::hdl64e_like();
  const double limit = near_field_limit(lidar, 1.73, 0.5);
  // ground ring of the lowest beam seen from 0.5 m further back
  const double ring = 1.73 / std::tan(deg2rad(24.8));
  EXPECT_NEAR(limit, -std::atan(1.73 / (ring + 0.5)), 1e-12);
  EXPECT_GT(limit, lidar.elevations.front());
  EXPECT_DOUBLE_EQ(near_field_limit(lidar, 1.73, 0.0), lidar.elevations.front());

  ExperimentConfig c = ExperimentConfig::desk(SceneKind::kRoadway, Method::kSphericalShadow);
  EXPECT_GE(effective_grid(c).elevation_min, limit);
  c.near_field_cut = false;
  EXPECT_EQ(effective_grid(c).elevation_min, c.grid.elevation_min);
}

TEST(Config, GridCoversLidar) {
  const auto lidar = sim::LidarModel::hdl64e_like();
  const WedgeGridConfig g = grid_for_lidar(lidar);
  EXPECT_LT(g.elevation_min, lidar.elevations.front());
  EXPECT_GT(g.elevation_max, lidar.elevations.back());
  EXPECT_NO_THROW(g.validate());
}

TEST(LocationFrame, EvenlySpaced) {
  ExperimentConfig c = ExperimentConfig::desk(SceneKind::kRoadway, Method::kSphericalShadow);
  c.locations = 10;
  EXPECT_EQ(location_frame(c, 0, 40), 0);
  EXPECT_EQ(location_frame(c, 9, 40), 36);
  c.locations = 20;
  EXPECT_EQ(location_frame(c, 19, 20), 19);
}

TEST(RunExperiment, DeterministicAndAccounted) {
  ExperimentConfig c = small_config();
  const auto a = run_experiment(c);
  c.workers = 2;
  const auto b = run_experiment(c);
  ASSERT_EQ(a.size(), 4u);
  ASSERT_EQ(b.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    expect_records_equal(a[i], b[i]);
    EXPECT_EQ(a[i].location, static_cast<int>(i) / 2);
    EXPECT_EQ(a[i].trial, static_cast<int>(i) % 2);
    EXPECT_EQ(a[i].error, a[i].estimate - a[i].truth);
  }
  const SummaryTable t = summarize(a);
  EXPECT_EQ(t.accepted + t.rejected, t.total);
  EXPECT_EQ(t.total, a.size());
}

TEST(RunExperiment, EveryMethodRuns) {
  for (Method m : {Method::kCartesian, Method::kCartesianNoGround}) {
    ExperimentConfig c = small_config();
    c.method = m;
    const auto records = run_experiment(c);
    ASSERT_EQ(records.size(), 4u);
    for (const auto& r : records) {
      EXPECT_NEAR(r.truth(0), -0.5, 1e-12);
      if (r.rejected) EXPECT_FALSE(r.reject_reason.empty());
    }
  }
}

TEST(Reports, RecordsCsvRoundTrip) {
  std::vector<TrialRecord> records;
  for (int i = 0; i < 5; ++i) {
    TrialRecord r;
    r.location = i;
    r.trial = 4 - i;
    for (int a = 0; a < 6; ++a) {
      r.truth(a) = 0.1 * a - 1.0 / 3.0;
      r.estimate(a) = std::exp(-a - i) * 1e-3;
      r.error(a) = r.estimate(a) - r.truth(a);
      r.predicted_sigma(a) = 1e-4 / (a + 1);
    }
    r.converged = i != 2;
    r.rejected = i == 2;
    if (r.rejected) r.reject_reason = "divergence";
    r.iterations = 3 + i;
    r.voxels_used = 100u + static_cast<std::size_t>(i);
    r.seconds = 0.25 * i;
    records.push_back(r);
  }
  std::stringstream s;
  write_records_csv(s, records);
  const auto back = read_records_csv(s);
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    expect_records_equal(back[i], records[i]);
    EXPECT_EQ(back[i].seconds, records[i].seconds);
  }

  std::istringstream bad("nonsense\n1,2,3\n");
  EXPECT_THROW(read_records_csv(bad), IoError);
}

TEST(Reports, TextTableLayout) {
  const SummaryTable t = summarize({record_with_error(-0.01), record_with_error(0.01), record_with_error(0, true)});
  std::ostringstream out;
  write_text_table(out, t, "roadway / spherical_shadow");
  std::istringstream in(out.str());
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 7u);
  EXPECT_EQ(lines[0], "roadway / spherical_shadow");
  EXPECT_NE(lines[1].find("x (cm)"), std::string::npos);
  EXPECT_NE(lines[1].find("yaw (deg)"), std::string::npos);
  EXPECT_EQ(lines[2].rfind("Actual", 0), 0u);
  EXPECT_EQ(lines[3].rfind("Predicted", 0), 0u);
  EXPECT_EQ(lines[6], "* 1 of 3 trials rejected");
  // x actual sigma of 1.414 cm
  EXPECT_NE(lines[2].find("1.4142"), std::string::npos);
  for (std::size_t i = 2; i < 6; ++i) {
    std::istringstream row(lines[i].substr(10));
    int values = 0;
    for (double v; row >> v;) ++values;
    EXPECT_EQ(values, 6) << lines[i];
  }
}

TEST(Reports, SummaryCsvCarriesProvenance) {
  const SummaryTable t = summarize({record_with_error(-1.0), record_with_error(1.0)});
  std::ostringstream out;
  write_summary_csv(out, t, "0123456789abcdef", 42);
  const std::string s = out.str();
  EXPECT_NE(s.find("# config_hash: 0123456789abcdef"), std::string::npos);
  EXPECT_NE(s.find("# master_seed: 42"), std::string::npos);
  EXPECT_NE(s.find("row,x_m,y_m,z_m,roll_rad,pitch_rad,yaw_rad"), std::string::npos);
}

TEST(Reports, ChartIsDeterministic) {
  const SummaryTable t = summarize({record_with_error(-0.002), record_with_error(0.003)});
  std::ostringstream a, b;
  write_svg_chart(a, t, "chart");
  write_svg_chart(b, t, "chart");
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().rfind("<svg", 0), 0u);
  EXPECT_NE(a.str().find("</svg>"), std::string::npos);
}
