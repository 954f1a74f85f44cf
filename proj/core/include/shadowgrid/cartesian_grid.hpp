#pragma once

// Conventional cubic voxel grid used as the comparison baseline. No shadow
// filtering is applied; every primary return belongs to the cube it falls in.

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "shadowgrid/point_cloud.hpp"
#include "shadowgrid/voxel_grid.hpp"
#include "shadowgrid/voxel_stats.hpp"

namespace shadowgrid {

using CellIndex = std::array<int, 3>;

/// floor((q - anchor) / edge) per axis.
CellIndex cell_of(const Vec3& q, double edge, const Vec3& anchor);

/// Grid anchor coordinate that places a plane at `plane_coordinate` through
/// the middle of its cells.
inline double anchor_bisecting(double plane_coordinate, double edge) {
  return plane_coordinate - 0.5 * edge;
}

class CartesianGrid final : public VoxelGrid {
 public:
  /// Creates one voxel per cube occupied by at least one primary point.
  CartesianGrid(const PointCloud& primary, double edge, const Vec3& anchor);

  double edge() const { return edge_; }
  const Vec3& anchor() const { return anchor_; }
  const std::vector<CellIndex>& cells() const { return cells_; }

  /// Primary point indices per voxel.
  const std::vector<std::vector<std::size_t>>& primary_members() const { return members_; }

  std::size_t voxel_count() const override { return cells_.size(); }
  std::optional<std::size_t> locate(const Vec3& q) const override;

 private:
  static std::uint64_t key(const CellIndex& c);

  double edge_;
  Vec3 anchor_;
  std::vector<CellIndex> cells_;
  std::vector<std::vector<std::size_t>> members_;
  std::unordered_map<std::uint64_t, std::size_t> lookup_;
};

/// Per-voxel statistics of both clouds on a shared cubic grid, the secondary
/// binned as given (identity transform). Voxels with fewer than two points
/// from a cloud carry count < 2 and zero moments for that cloud.
struct CartesianPrepared {
  CartesianGrid grid;
  std::vector<VoxelStats> primary;
  std::vector<VoxelStats> secondary;
};

/// Throws std::invalid_argument unless edge > 0.
CartesianPrepared cartesian_grid_prepare(const PointCloud& primary, const PointCloud& secondary, double edge,
                                         const Vec3& anchor);

}  // namespace shadowgrid
