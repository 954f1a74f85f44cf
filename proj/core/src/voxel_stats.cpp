#include "shadowgrid/voxel_stats.hpp"

#include <string>

namespace shadowgrid {

VoxelStats voxel_stats(std::span<const Vec3> points) {
  if (points.size() < 2) {
    throw InsufficientPointsError("voxel_stats: need at least 2 points, got " + std::to_string(points.size()));
  }
  VoxelStats s;
  s.count = points.size();
  for (const Vec3& p : points) s.mean += p;
  s.mean /= static_cast<double>(s.count);
  for (const Vec3& p : points) {
    const Vec3 d = p - s.mean;
    s.covariance.noalias() += d * d.transpose();
  }
  s.covariance /= static_cast<double>(s.count - 1);
  // exact symmetry
  s.covariance = 0.5 * (s.covariance + s.covariance.transpose()).eval();
  return s;
}

}  // namespace shadowgrid
