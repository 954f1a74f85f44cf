#include "shadowgrid/cartesian_grid.hpp"

#include <cmath>
#include <stdexcept>

namespace shadowgrid {
namespace {

std::vector<VoxelStats> stats_of(const PointCloud& cloud, const std::vector<std::vector<std::size_t>>& members) {
  std::vector<VoxelStats> out(members.size());
  std::vector<Vec3> buf;
  for (std::size_t v = 0; v < members.size(); ++v) {
    if (members[v].size() < 2) {
      out[v].count = members[v].size();
      if (!members[v].empty()) out[v].mean = cloud.points[members[v].front()];
      continue;
    }
    buf.clear();
    for (std::size_t k : members[v]) buf.push_back(cloud.points[k]);
    out[v] = voxel_stats(buf);
  }
  return out;
}

}  // namespace

CellIndex cell_of(const Vec3& q, double edge, const Vec3& anchor) {
  const Vec3 c = (q - anchor) / edge;
  return {static_cast<int>(std::floor(c.x())), static_cast<int>(std::floor(c.y())),
          static_cast<int>(std::floor(c.z()))};
}

std::uint64_t CartesianGrid::key(const CellIndex& c) {
  constexpr std::uint64_t kMask = (1ULL << 21) - 1;
  constexpr int kBias = 1 << 20;
  return (static_cast<std::uint64_t>(c[0] + kBias) & kMask) |
         ((static_cast<std::uint64_t>(c[1] + kBias) & kMask) << 21) |
         ((static_cast<std::uint64_t>(c[2] + kBias) & kMask) << 42);
}

CartesianGrid::CartesianGrid(const PointCloud& primary, double edge, const Vec3& anchor)
    : edge_(edge), anchor_(anchor) {
  if (!(edge > 0.0)) throw std::invalid_argument("CartesianGrid: edge must be positive");
  for (std::size_t k = 0; k < primary.points.size(); ++k) {
    const Vec3& p = primary.points[k];
    if (!p.allFinite()) continue;
    const CellIndex c = cell_of(p, edge_, anchor_);
    auto [it, inserted] = lookup_.try_emplace(key(c), cells_.size());
    if (inserted) {
      cells_.push_back(c);
      members_.emplace_back();
    }
    members_[it->second].push_back(k);
  }
}

std::optional<std::size_t> CartesianGrid::locate(const Vec3& q) const {
  if (!q.allFinite()) return std::nullopt;
  const auto it = lookup_.find(key(cell_of(q, edge_, anchor_)));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

CartesianPrepared cartesian_grid_prepare(const PointCloud& primary, const PointCloud& secondary, double edge,
                                         const Vec3& anchor) {
  CartesianGrid grid(primary, edge, anchor);
  std::vector<std::vector<std::size_t>> sec(grid.voxel_count());
  for (std::size_t k = 0; k < secondary.points.size(); ++k) {
    if (const auto v = grid.locate(secondary.points[k])) sec[*v].push_back(k);
  }
  auto primary_stats = stats_of(primary, grid.primary_members());
  auto secondary_stats = stats_of(secondary, sec);
  return {std::move(grid), std::move(primary_stats), std::move(secondary_stats)};
}

}  // namespace shadowgrid
