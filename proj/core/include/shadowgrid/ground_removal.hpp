#pragma once

// Ground-plane removal baseline: drop every return close to the ground
// surface before matching.

#include <functional>

#include "shadowgrid/point_cloud.hpp"

namespace shadowgrid {

/// Ground height z = g(x, y) expressed in the cloud's own frame.
using GroundHeight = std::function<double(double x, double y)>;

/// z = a x + b y + c
struct GroundPlane {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double height(double x, double y) const { return a * x + b * y + c; }
};

/// Least-squares plane through the lowest decile (by z) of the cloud.
/// Throws std::invalid_argument for clouds with fewer than 30 points.
GroundPlane estimate_ground_plane(const PointCloud& cloud);

/// Keeps only returns at least `height_tolerance` above the ground surface.
PointCloud remove_ground_plane(const PointCloud& cloud, const GroundHeight& ground, double height_tolerance);
PointCloud remove_ground_plane(const PointCloud& cloud, const GroundPlane& plane, double height_tolerance);

}  // namespace shadowgrid
