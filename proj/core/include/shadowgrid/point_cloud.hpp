#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "shadowgrid/geometry.hpp"

namespace shadowgrid {

/// Which scene primitive produced a simulated return.
enum class SurfaceKind : std::uint8_t { kUnknown = 0, kGround, kWall, kColumn, kTerrain };

/// One Lidar sweep in the sensor frame. `sources` is either empty or
/// parallel to `points`.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<SurfaceKind> sources;
  std::optional<std::uint64_t> seed;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_sources() const { return !sources.empty() && sources.size() == points.size(); }

  void push_back(const Vec3& p, SurfaceKind kind = SurfaceKind::kUnknown) {
    points.push_back(p);
    sources.push_back(kind);
  }
};

/// Applies `t` to every point; sources and seed are carried over.
PointCloud transformed(const PointCloud& cloud, const RigidTransform& t);

}  // namespace shadowgrid
