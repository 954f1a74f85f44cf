#include "shadowgrid/scan_match.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

namespace shadowgrid {
namespace {

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}
Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}
Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}
Mat3 drot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 0, 0, 0, 0, -s, -c, 0, c, -s;
  return m;
}
Mat3 drot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << -s, 0, c, 0, 0, 0, -c, 0, -s;
  return m;
}
Mat3 drot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << -s, -c, 0, c, -s, 0, 0, 0, 0;
  return m;
}

// Ratio of extreme eigenvalues of a symmetric matrix; infinity when not
// positive definite.
template <typename Matrix>
double spd_condition(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  if (!(ev(0) > 0.0)) return std::numeric_limits<double>::infinity();
  return ev(ev.size() - 1) / ev(0);
}

}  // namespace

void MatchConfig::validate() const {
  if (max_iterations <= 0 || !(step_tolerance > 0.0) || min_points_per_voxel < 2 || !(divergence_radius > 0.0) ||
      !(voxel_condition_limit > 0.0) || !(normal_condition_limit > 0.0) || !(covariance_floor >= 0.0)) {
    throw std::invalid_argument("MatchConfig: parameters must be positive (min_points_per_voxel >= 2)");
  }
}

std::string to_string(MatchError::Kind kind) {
  switch (kind) {
    case MatchError::Kind::kInsufficientVoxels: return "insufficient_voxels";
    case MatchError::Kind::kDivergence: return "divergence";
    case MatchError::Kind::kRankDeficient: return "rank_deficient";
  }
  return "unknown";
}

Vec6 predicted_sigma(const SolutionReport& report) {
  return report.predicted_covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
}

std::string serialize_report(const SolutionReport& report) {
  const Vec6 sigma = predicted_sigma(report);
  nlohmann::ordered_json j;
  j["state"] = {{"x_m", report.state(0)},        {"y_m", report.state(1)},
                {"z_m", report.state(2)},        {"roll_rad", report.state(3)},
                {"pitch_rad", report.state(4)},  {"yaw_rad", report.state(5)}};
  j["predicted_sigma"] = {{"x_m", sigma(0)},       {"y_m", sigma(1)},       {"z_m", sigma(2)},
                          {"roll_rad", sigma(3)},  {"pitch_rad", sigma(4)}, {"yaw_rad", sigma(5)}};
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  j["voxels_used"] = report.voxels_used;
  return j.dump(2);
}

VoxelReference::VoxelReference(std::shared_ptr<const VoxelGrid> grid, std::vector<VoxelStats> primary)
    : grid_(std::move(grid)), primary_(std::move(primary)) {
  if (!grid_) throw std::invalid_argument("VoxelReference: null grid");
  if (primary_.size() != grid_->voxel_count()) {
    throw std::invalid_argument("VoxelReference: one statistics entry per voxel required");
  }
}

VoxelReference make_reference(std::shared_ptr<const SphericalGrid> grid, const PointCloud& primary) {
  std::vector<VoxelStats> stats(grid->voxel_count());
  std::vector<Vec3> buf;
  for (std::size_t v = 0; v < grid->voxels().size(); ++v) {
    buf.clear();
    for (std::size_t k : grid->voxels()[v].retained) buf.push_back(primary.points[k]);
    if (buf.size() >= 2) stats[v] = voxel_stats(buf);
    else stats[v].count = buf.size();
  }
  return VoxelReference(std::move(grid), std::move(stats));
}

VoxelReference make_reference(std::shared_ptr<const CartesianGrid> grid, const PointCloud& primary) {
  std::vector<VoxelStats> stats(grid->voxel_count());
  std::vector<Vec3> buf;
  for (std::size_t v = 0; v < grid->primary_members().size(); ++v) {
    buf.clear();
    for (std::size_t k : grid->primary_members()[v]) buf.push_back(primary.points[k]);
    if (buf.size() >= 2) stats[v] = voxel_stats(buf);
    else stats[v].count = buf.size();
  }
  return VoxelReference(std::move(grid), std::move(stats));
}

Eigen::Matrix<double, Eigen::Dynamic, 3, 0, 3, 3> compact_axes(const VoxelGrid& grid, std::size_t voxel,
                                                               const VoxelStats& stats) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(stats.covariance);
  Eigen::Matrix<double, Eigen::Dynamic, 3, 0, 3, 3> rows(0, 3);
  for (int k = 0; k < 3; ++k) {
    const Vec3 axis = es.eigenvectors().col(k);
    const Vec3 reach = 2.0 * std::sqrt(std::max(es.eigenvalues()(k), 0.0)) * axis;
    if (grid.contains(voxel, stats.mean + reach) && grid.contains(voxel, stats.mean - reach)) {
      rows.conservativeResize(rows.rows() + 1, 3);
      rows.row(rows.rows() - 1) = axis.transpose();
    }
  }
  return rows;
}

Mat36 mean_jacobian(const Vec6& state, const Vec3& m) {
  const double roll = state(3), pitch = state(4), yaw = state(5);
  const Mat3 rx = rot_x(roll), ry = rot_y(pitch), rz = rot_z(yaw);
  Mat36 j;
  j.leftCols<3>() = -Mat3::Identity();
  j.col(3) = rz * ry * drot_x(roll) * m;
  j.col(4) = rz * drot_y(pitch) * rx * m;
  j.col(5) = drot_z(yaw) * ry * rx * m;
  return j;
}

namespace {

constexpr std::size_t kMaxCycle = 8;
constexpr double kCycleSigmaFraction = 0.1;

std::optional<Vec6> settle_cycle(const std::vector<Vec6>& history, const Vec6& state, const Mat6& covariance,
                                 double tol) {
  const std::size_t n = history.size();
  // history.back() is the previous iterate; a repeat of it is plain convergence
  for (std::size_t back = 2; back <= std::min(kMaxCycle, n); ++back) {
    const std::size_t first = n - back;
    if ((history[first] - state).norm() >= tol) continue;
    Vec6 mean = Vec6::Zero();
    Vec6 lo = state, hi = state;
    for (std::size_t k = first + 1; k < n; ++k) {
      mean += history[k];
      lo = lo.cwiseMin(history[k]);
      hi = hi.cwiseMax(history[k]);
    }
    mean = (mean + state) / static_cast<double>(back);
    const Vec6 sigma = covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    if (((hi - lo).array() <= kCycleSigmaFraction * sigma.array()).all()) return mean;
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

SolutionReport match(const VoxelReference& reference, const PointCloud& secondary, const RigidTransform& init,
                     const MatchConfig& cfg) {
  cfg.validate();
  const VoxelGrid& grid = reference.grid();
  const std::size_t voxel_count = grid.voxel_count();
  const Mat3 floor = cfg.covariance_floor * Mat3::Identity();

  using Projection = Eigen::Matrix<double, Eigen::Dynamic, 3, 0, 3, 3>;
  std::vector<Projection> axes(voxel_count);
  for (std::size_t v = 0; v < voxel_count; ++v) {
    const VoxelStats& p = reference.primary()[v];
    if (p.count < cfg.min_points_per_voxel) continue;
    axes[v] = cfg.prune_extended_axes ? compact_axes(grid, v, p) : Projection(Mat3::Identity());
  }

  // secondary moments per voxel, taken about the primary mean so that the
  // one-pass covariance does not cancel at long range
  struct Moments {
    std::size_t count = 0;
    Vec3 sum = Vec3::Zero();
    Mat3 outer = Mat3::Zero();
    Vec3 raw = Vec3::Zero();
  };

  SolutionReport report;
  Vec6 state = init.state();
  std::vector<Moments> moments(voxel_count);
  std::vector<Vec6> history{state};

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    const RigidTransform current = RigidTransform::from_state(state);
    std::fill(moments.begin(), moments.end(), Moments{});
    for (const Vec3& point : secondary.points) {
      const Vec3 q = current.apply(point);
      const auto v = grid.locate(q);
      if (!v || axes[*v].rows() == 0) continue;
      Moments& m = moments[*v];
      const Vec3 d = q - reference.primary()[*v].mean;
      ++m.count;
      m.sum += d;
      m.outer.noalias() += d * d.transpose();
      m.raw += point;
    }

    Mat6 normal = Mat6::Zero();
    Vec6 gradient = Vec6::Zero();
    std::size_t used = 0;
    for (std::size_t v = 0; v < voxel_count; ++v) {
      const VoxelStats& p = reference.primary()[v];
      const Moments& m = moments[v];
      const std::size_t ns = m.count;
      if (p.count < cfg.min_points_per_voxel || ns < cfg.min_points_per_voxel || ns < 2) continue;
      const Projection& proj = axes[v];
      if (proj.rows() == 0) continue;

      const double n = static_cast<double>(ns);
      const Vec3 shift = m.sum / n;
      VoxelStats s;
      s.count = ns;
      s.mean = p.mean + shift;
      s.covariance = (m.outer - n * shift * shift.transpose()) / (n - 1.0);
      const Vec3 raw_mean = m.raw / n;

      const Mat3 mean_cov = (p.covariance + floor) / static_cast<double>(p.count) +
                            (s.covariance + floor) / static_cast<double>(s.count);
      using Small = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
      const Small cov = proj * mean_cov * proj.transpose();
      if (spd_condition(cov) > cfg.voxel_condition_limit) continue;
      const Small weight = cov.inverse();
      const Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1> residual = proj * (p.mean - s.mean);
      const Eigen::Matrix<double, Eigen::Dynamic, 6, 0, 3, 6> j = proj * mean_jacobian(state, raw_mean);
      normal.noalias() += j.transpose() * weight * j;
      gradient.noalias() += j.transpose() * weight * residual;
      ++used;
    }

    if (used < 6) {
      throw MatchError(MatchError::Kind::kInsufficientVoxels,
                       "match: only " + std::to_string(used) + " usable voxels (need 6)");
    }
    normal = 0.5 * (normal + normal.transpose()).eval();
    if (spd_condition(normal) > cfg.normal_condition_limit) {
      throw MatchError(MatchError::Kind::kRankDeficient, "match: normal matrix is rank deficient");
    }
    const Eigen::LDLT<Mat6> ldlt(normal);
    const Vec6 step = ldlt.solve(gradient);
    state += step;

    report.iterations = iter;
    report.voxels_used = used;
    report.predicted_covariance = ldlt.solve(Mat6::Identity());
    report.predicted_covariance = 0.5 * (report.predicted_covariance + report.predicted_covariance.transpose()).eval();

    if (!state.allFinite() || state.head<3>().norm() > cfg.divergence_radius) {
      throw MatchError(MatchError::Kind::kDivergence, "match: translation left the divergence radius");
    }
    if (step.norm() < cfg.step_tolerance) {
      report.converged = true;
      break;
    }
    // Secondary points crossing voxel boundaries can trap the solver in a
    // short cycle of membership sets. When an iterate revisits an earlier
    // one and the cycle is small against the predicted sigma, settle on its
    // mean.
    if (!cfg.settle_limit_cycles) continue;
    if (const auto settled = settle_cycle(history, state, report.predicted_covariance, cfg.step_tolerance)) {
      state = *settled;
      report.converged = true;
      break;
    }
    history.push_back(state);
  }

  report.state = state;
  report.estimate = RigidTransform::from_state(state);
  return report;
}

}  // namespace shadowgrid
