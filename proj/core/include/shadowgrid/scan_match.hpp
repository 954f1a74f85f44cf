#pragma once

// Voxel-mean scan matcher with an analytic accuracy prediction.
//
// Each iteration maps the secondary scan into primary coordinates with the
// current estimate, re-bins it into the fixed primary voxels and compares
// per-voxel means. With y_i the mean residual, W_i = (Sp/np + Ss/ns)^-1 and
// J_i the derivative of the secondary mean with respect to the state
// (x, y, z, roll, pitch, yaw), the Gauss-Newton step is
//
//   delta = (sum J^T W J)^-1 sum J^T W y
//
// and the predicted error covariance at the final iterate is
// (sum J^T W J)^-1.
//
// With extended-axis pruning enabled the residual, weight and Jacobian of a
// voxel are first projected onto the principal axes of its primary
// distribution that stay inside the voxel.

#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "shadowgrid/cartesian_grid.hpp"
#include "shadowgrid/point_cloud.hpp"
#include "shadowgrid/spherical_grid.hpp"
#include "shadowgrid/voxel_grid.hpp"
#include "shadowgrid/voxel_stats.hpp"

namespace shadowgrid {

using Mat36 = Eigen::Matrix<double, 3, 6>;

struct MatchConfig {
  int max_iterations = 50;
  double step_tolerance = 1e-6;      // on the mixed m/rad norm of the step
  std::size_t min_points_per_voxel = 5;
  double divergence_radius = 5.0;    // meters
  double voxel_condition_limit = 1e8;
  double normal_condition_limit = 1e12;
  double covariance_floor = 1e-6;    // m^2 added to each voxel covariance
  /// Drop principal directions of a primary distribution whose 2-sigma
  /// endpoints leave the voxel; a voxel mean cannot track motion along a
  /// surface that continues past the voxel walls.
  bool prune_extended_axes = true;
  /// Stop at the mean of a short cycle of iterates when the cycle is small
  /// against the predicted sigma (see match()).
  bool settle_limit_cycles = true;

  void validate() const;
};

class MatchError : public std::runtime_error {
 public:
  enum class Kind { kInsufficientVoxels, kDivergence, kRankDeficient };
  MatchError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string to_string(MatchError::Kind kind);

struct SolutionReport {
  RigidTransform estimate;
  Vec6 state = Vec6::Zero();  // x, y, z, roll, pitch, yaw
  Mat6 predicted_covariance = Mat6::Zero();
  int iterations = 0;
  bool converged = false;
  std::size_t voxels_used = 0;
};

/// Element-wise square root of the predicted covariance diagonal.
Vec6 predicted_sigma(const SolutionReport& report);

/// JSON record: state, predicted sigma, iterations, converged, voxels_used.
std::string serialize_report(const SolutionReport& report);

/// Fixed primary voxels and their statistics.
class VoxelReference {
 public:
  VoxelReference(std::shared_ptr<const VoxelGrid> grid, std::vector<VoxelStats> primary);

  const VoxelGrid& grid() const { return *grid_; }
  const std::vector<VoxelStats>& primary() const { return primary_; }

 private:
  std::shared_ptr<const VoxelGrid> grid_;
  std::vector<VoxelStats> primary_;
};

/// Statistics of the retained primary returns of each radial voxel.
VoxelReference make_reference(std::shared_ptr<const SphericalGrid> grid, const PointCloud& primary);
/// Statistics of all primary returns of each cube.
VoxelReference make_reference(std::shared_ptr<const CartesianGrid> grid, const PointCloud& primary);

/// Rows are the unit principal axes of `stats` whose mean +/- 2 sigma
/// endpoints both stay inside `voxel` of `grid`. Zero rows when every axis
/// is extended.
Eigen::Matrix<double, Eigen::Dynamic, 3, 0, 3, 3> compact_axes(const VoxelGrid& grid, std::size_t voxel,
                                                               const VoxelStats& stats);

/// d(R(state) m - t)/d(state) for a secondary-frame mean m.
Mat36 mean_jacobian(const Vec6& state, const Vec3& secondary_mean);

/// Registers `secondary` against the reference starting from `init`.
/// Throws MatchError on divergence, a singular normal matrix or fewer than
/// six usable voxels. Running out of iterations returns converged = false.
SolutionReport match(const VoxelReference& reference, const PointCloud& secondary, const RigidTransform& init,
                     const MatchConfig& cfg);

}  // namespace shadowgrid
