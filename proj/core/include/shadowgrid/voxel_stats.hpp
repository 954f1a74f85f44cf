#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

#include "shadowgrid/geometry.hpp"

namespace shadowgrid {

class InsufficientPointsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Point count, mean and unbiased sample covariance of one voxel.
struct VoxelStats {
  std::size_t count = 0;
  Vec3 mean = Vec3::Zero();
  Mat3 covariance = Mat3::Zero();
};

/// Throws InsufficientPointsError for fewer than two points.
VoxelStats voxel_stats(std::span<const Vec3> points);

}  // namespace shadowgrid
