#pragma once

// Spherical wedge grid with adaptive radial bounds.
//
// The sensor's field of view is split into azimuth x elevation wedges. Inside
// each wedge the returns are sorted by range and only the nearest cluster of
// more than N points with no gap larger than T is kept; everything behind it
// (shadow edges, occluded surfaces) and any sparse stray returns in front of
// it are excluded. The surviving cluster defines one radial voxel per wedge,
// padded slightly so that a secondary scan sees the same surfaces.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "shadowgrid/point_cloud.hpp"
#include "shadowgrid/voxel_grid.hpp"

namespace shadowgrid {

struct WedgeGridConfig {
  double azimuth_bin = deg2rad(7.2);    // radians; 2*pi must be an integer multiple
  double elevation_bin = deg2rad(7.2);  // radians
  double elevation_min = deg2rad(-25.2);
  double elevation_max = deg2rad(3.6);
  double jump_threshold = 0.2;          // T, meters
  std::size_t min_cluster = 50;         // N; a cluster needs more than N points
  double max_pad = 0.5;                 // meters

  /// Throws std::invalid_argument.
  void validate() const;

  int azimuth_bins() const;
  int elevation_bins() const;
};

struct WedgeIndex {
  int azimuth = 0;
  int elevation = 0;
  friend bool operator==(const WedgeIndex&, const WedgeIndex&) = default;
};

/// Returns of one wedge, sorted by (range, point index).
struct WedgeSet {
  WedgeIndex index;
  std::vector<std::size_t> members;
  std::vector<double> radii;
};

struct WedgeAssignment {
  std::vector<WedgeSet> wedges;  // non-empty wedges, ordered by (elevation, azimuth)
  std::size_t dropped = 0;       // outside the elevation limits or non-finite
};

/// Index of the wedge containing the direction (azimuth, elevation), or
/// nullopt outside the elevation limits. Intervals are half-open.
std::optional<WedgeIndex> wedge_of(double azimuth, double elevation, const WedgeGridConfig& cfg);

/// Wedge lookup for Cartesian points, equal to wedge_of on the point's
/// azimuth and elevation. Bins are found from a monotone pseudo-angle and
/// precomputed boundary sines; only points within 1e-12 of a boundary take the
/// trigonometric path, so both always agree.
class WedgeLocator {
 public:
  explicit WedgeLocator(const WedgeGridConfig& cfg);

  /// `range` must be q.norm() and positive.
  std::optional<WedgeIndex> operator()(const Vec3& q, double range) const;

 private:
  std::optional<WedgeIndex> exact(const Vec3& q) const;

  WedgeGridConfig cfg_;
  int az_bins_ = 0;
  int el_bins_ = 0;
  std::vector<double> az_edge_;   // boundary pseudo-angles, az_bins + 1 entries
  std::vector<int> az_table_;     // first candidate bin per pseudo-angle cell
  std::vector<double> el_sin_;           // sine of lower edges, then of elevation_max
};

WedgeAssignment assign_wedges(const PointCloud& cloud, const WedgeGridConfig& cfg);

/// Inclusive index range [first, last] into a sorted radius list.
struct RadialRun {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t count() const { return last - first + 1; }
  friend bool operator==(const RadialRun&, const RadialRun&) = default;
};

/// Jump-detection scan over ascending radii. Returns the nearest run of more
/// than `min_cluster` points without an internal gap above
/// `jump_threshold`, or nullopt when the wedge has no such run.
std::optional<RadialRun> adaptive_radial_bounds(const std::vector<double>& sorted_radii,
                                                double jump_threshold, std::size_t min_cluster);
inline std::optional<RadialRun> adaptive_radial_bounds(const WedgeSet& w, const WedgeGridConfig& cfg) {
  return adaptive_radial_bounds(w.radii, cfg.jump_threshold, cfg.min_cluster);
}

struct RadialBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Widens each side by min(max_pad, half the gap to the nearest excluded
/// return on that side); a side with no excluded return gets max_pad. The
/// lower bound is clamped at zero.
RadialBounds pad_bounds(RadialBounds unpadded, std::optional<double> nearest_excluded_inner,
                        std::optional<double> nearest_excluded_outer, double max_pad);

struct RadialVoxel {
  WedgeIndex wedge;
  double r_lower = 0.0;  // padded
  double r_upper = 0.0;  // padded
  double cluster_lower = 0.0;  // unpadded, range of the nearest retained return
  double cluster_upper = 0.0;  // unpadded, range of the farthest retained return
  std::vector<std::size_t> retained;  // indices into the primary cloud
};

class SphericalGrid final : public VoxelGrid {
 public:
  SphericalGrid(WedgeGridConfig cfg, std::vector<RadialVoxel> voxels, std::vector<bool> retained_mask,
                std::size_t dropped);

  const WedgeGridConfig& config() const { return cfg_; }
  const std::vector<RadialVoxel>& voxels() const { return voxels_; }

  /// One flag per primary point; true when the point lies in some voxel.
  const std::vector<bool>& retained_mask() const { return retained_; }
  std::size_t dropped_count() const { return dropped_; }
  std::size_t retained_count() const;
  std::size_t excluded_count() const;  // in elevation range but not retained

  /// Fewer than six voxels cannot constrain a 6-DoF pose.
  bool underconstrained() const { return voxels_.size() < 6; }

  std::size_t voxel_count() const override { return voxels_.size(); }
  std::optional<std::size_t> locate(const Vec3& q) const override;
  bool contains(std::size_t voxel, const Vec3& q) const override;

  std::optional<std::size_t> voxel_at(WedgeIndex w) const;

  /// Lower azimuth / elevation limit of a wedge.
  double azimuth_lower(int i) const { return -kPi + i * cfg_.azimuth_bin; }
  double elevation_lower(int j) const { return cfg_.elevation_min + j * cfg_.elevation_bin; }

 private:
  WedgeGridConfig cfg_;
  int az_bins_ = 0;
  int el_bins_ = 0;
  WedgeLocator locator_;
  std::vector<RadialVoxel> voxels_;
  std::vector<int> wedge_to_voxel_;
  std::vector<bool> retained_;
  std::size_t dropped_ = 0;
};

/// Runs the adaptive radial bound search on every wedge of the primary scan.
/// Throws std::invalid_argument for an empty cloud.
SphericalGrid build_shadow_filtered_grid(const PointCloud& primary, const WedgeGridConfig& cfg);

/// Transforms secondary points into the primary frame and bins them into
/// the existing voxels. Entry v lists the secondary indices inside voxel v.
std::vector<std::vector<std::size_t>> filter_secondary(const PointCloud& secondary,
                                                       const VoxelGrid& grid,
                                                       const RigidTransform& t);

/// Delimited dump, one record per voxel:
/// i,j,alpha_i,beta_j,r_lower,r_upper,count
void write_grid_dump(std::ostream& out, const SphericalGrid& grid);

}  // namespace shadowgrid
