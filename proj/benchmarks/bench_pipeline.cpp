#include <memory>

#include <benchmark/benchmark.h>

#include "shadowgrid/cartesian_grid.hpp"
#include "shadowgrid/harness.hpp"
#include "shadowgrid/scan_match.hpp"
#include "shadowgrid/sim.hpp"

using namespace shadowgrid;

namespace {

struct Fixture {
  harness::ExperimentConfig cfg = harness::ExperimentConfig::desk(harness::SceneKind::kRoadway,
                                                                  harness::Method::kSphericalShadow);
  sim::Scene scene = sim::build_roadway_scene(cfg.roadway);
  Pose a = Pose::from_xyz_yaw(4.0, 0.0, 1.73, 0.0);
  Pose b = Pose::from_xyz_yaw(4.5, 0.0, 1.73, 0.0);
  PointCloud primary = sim::raycast_scan(scene, cfg.lidar, a, 1);
  PointCloud secondary = sim::raycast_scan(scene, cfg.lidar, b, 2);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_RaycastRoadway(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(sim::raycast_scan(f.scene, f.cfg.lidar, f.a, 1));
}
BENCHMARK(BM_RaycastRoadway)->Unit(benchmark::kMillisecond);

void BM_RaycastOffroad(benchmark::State& state) {
  const auto cfg = harness::ExperimentConfig::desk(harness::SceneKind::kOffroad, harness::Method::kSphericalShadow);
  const sim::Scene scene = sim::build_offroad_scene(cfg.offroad, cfg.terrain_seed);
  const Pose pose = Pose::from_xyz_yaw(0.0, 0.0, scene.ground_height(0, 0) + 1.73, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(sim::raycast_scan(scene, cfg.lidar, pose, 1));
}
BENCHMARK(BM_RaycastOffroad)->Unit(benchmark::kMillisecond);

void BM_ShadowFilteredGrid(benchmark::State& state) {
  const Fixture& f = fixture();
  const WedgeGridConfig grid = harness::effective_grid(f.cfg);
  for (auto _ : state) benchmark::DoNotOptimize(build_shadow_filtered_grid(f.primary, grid));
}
BENCHMARK(BM_ShadowFilteredGrid)->Unit(benchmark::kMillisecond);

void BM_CartesianGrid(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(CartesianGrid(f.primary, 3.0, Vec3(0.0, -11.5, -3.23)));
}
BENCHMARK(BM_CartesianGrid)->Unit(benchmark::kMillisecond);

// Grid construction plus matching, as timed by the experiment harness; the
// ray casting inside run_trial is excluded.
void pair_pipeline(benchmark::State& state, harness::Method method) {
  const Fixture& f = fixture();
  auto cfg = f.cfg;
  cfg.method = method;
  for (auto _ : state) state.SetIterationTime(harness::run_trial(cfg, f.scene, f.a, f.b, 0, 0).seconds);
}
BENCHMARK_CAPTURE(pair_pipeline, spherical, harness::Method::kSphericalShadow)
    ->UseManualTime()
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(pair_pipeline, cartesian, harness::Method::kCartesian)->UseManualTime()->Unit(benchmark::kMillisecond);

void BM_MatchOnly(benchmark::State& state) {
  const Fixture& f = fixture();
  auto grid = std::make_shared<SphericalGrid>(build_shadow_filtered_grid(f.primary, harness::effective_grid(f.cfg)));
  const VoxelReference ref = make_reference(grid, f.primary);
  for (auto _ : state) benchmark::DoNotOptimize(match(ref, f.secondary, {}, f.cfg.match));
}
BENCHMARK(BM_MatchOnly)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
