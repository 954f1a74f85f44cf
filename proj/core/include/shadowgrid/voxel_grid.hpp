#pragma once

#include <cstddef>
#include <optional>

#include "shadowgrid/geometry.hpp"

namespace shadowgrid {

/// A fixed partition of primary-scan space into numbered voxels. The matcher
/// re-bins transformed secondary points through `locate` every iteration.
class VoxelGrid {
 public:
  virtual ~VoxelGrid() = default;

  virtual std::size_t voxel_count() const = 0;

  /// Voxel holding `q` (primary-scan coordinates), if any.
  virtual std::optional<std::size_t> locate(const Vec3& q) const = 0;

  virtual bool contains(std::size_t voxel, const Vec3& q) const {
    const auto v = locate(q);
    return v && *v == voxel;
  }
};

}  // namespace shadowgrid
