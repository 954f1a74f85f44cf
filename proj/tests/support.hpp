#pragma once

// Fixtures shared by the unit tests and the acceptance runner.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "shadowgrid/geometry.hpp"
#include "shadowgrid/shadow_model.hpp"
#include "shadowgrid/sim.hpp"
#include "shadowgrid/spherical_grid.hpp"

namespace shadowgrid::fixtures {

/// Column at (rho_l, 0), wall across the line of sight rho_v behind it. The
/// sensor moves sideways by delta, which slides the shadow on the wall.
struct ColumnShadowSetup {
  double rho_l = 10.0;
  double rho_v = 20.0;
  double delta = 0.5;
  double column_radius = 0.4;
  double sensor_height = 1.73;
};

struct ShadowMeasurement {
  double measured = 0.0;   // |shift| of the wall-patch mean, meters
  double predicted = 0.0;  // closed-form mean shift
};

inline sim::Scene column_shadow_scene(const ColumnShadowSetup& s) {
  sim::Scene scene;
  scene.name = "column_shadow";
  scene.cylinders.push_back({sim::Vec2(s.rho_l, 0.0), s.column_radius, 0.0, 10.0});
  const double xw = s.rho_l + s.rho_v;
  scene.walls.push_back({sim::Vec2(xw, -30.0), sim::Vec2(xw, 30.0), 0.0, 10.0});
  return scene;
}

/// Mean y of the wall returns inside a world-fixed patch that holds one
/// shadow edge in both scans; its shift is compared with the model.
inline ShadowMeasurement measure_column_shadow(const ColumnShadowSetup& s) {
  const sim::Scene scene = column_shadow_scene(s);
  // dense horizontal fan so the patch holds thousands of returns
  const sim::LidarModel lidar = sim::LidarModel::uniform(9, -2.0, 2.0, 0.02, 120.0, 0.0);
  const Pose a = Pose::from_xyz_yaw(0.0, 0.0, s.sensor_height, 0.0);
  const Pose b = Pose::from_xyz_yaw(0.0, s.delta, s.sensor_height, 0.0);

  // Shadow centre on the wall moves from 0 to -delta * rho_v / rho_l; the
  // patch starts halfway, inside both shadows, and extends past the upper edge.
  const double xw = s.rho_l + s.rho_v;
  const double lo = -0.5 * s.delta * s.rho_v / s.rho_l;
  const double hi = lo + 4.0;

  const auto patch_mean = [&](const Pose& pose) {
    const PointCloud c = sim::raycast_scan(scene, lidar, pose, 1);
    double sum = 0.0;
    int n = 0;
    for (const Vec3& p : c.points) {
      const Vec3 w = pose.to_world(p);
      if (std::abs(w.x() - xw) < 0.3 && w.y() >= lo && w.y() < hi && w.z() > 0.5 && w.z() < 3.0) {
        sum += w.y();
        ++n;
      }
    }
    return sum / n;
  };

  ShadowMeasurement m;
  m.measured = std::abs(patch_mean(b) - patch_mean(a));
  m.predicted = apparent_mean_shift({s.rho_l, s.rho_v, s.delta});
  return m;
}

// Enumerates every gap-free run that cannot be extended on either side and
// returns the nearest one holding more than n points.
inline std::optional<RadialRun> radial_oracle(const std::vector<double>& r, double t, std::size_t n) {
  std::optional<RadialRun> best;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i > 0 && r[i] - r[i - 1] <= t) continue;  // not a run start
    for (std::size_t j = i; j < r.size(); ++j) {
      bool gap_free = true;
      for (std::size_t k = i + 1; k <= j; ++k) gap_free = gap_free && r[k] - r[k - 1] <= t;
      const bool closed = j + 1 == r.size() || r[j + 1] - r[j] > t;
      if (gap_free && closed && j - i + 1 > n && (!best || i < best->first)) best = RadialRun{i, j};
    }
  }
  return best;
}

inline std::vector<double> random_wedge(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(0, 120), kind(0, 9);
  std::uniform_real_distribution<double> small(0.0, 0.2), big(0.2, 3.0), start(1.0, 60.0);
  std::vector<double> r;
  const int n = size(rng);
  double x = start(rng);
  for (int i = 0; i < n; ++i) {
    r.push_back(x);
    const int k = kind(rng);
    // mostly in-cluster spacing, with exact ties, exact-threshold gaps and jumps
    if (k == 0) continue;
    x += k == 1 ? 0.2 : (k == 2 ? big(rng) : small(rng));
  }
  return r;
}

}  // namespace shadowgrid::fixtures
