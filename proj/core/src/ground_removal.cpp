#include "shadowgrid/ground_removal.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

namespace shadowgrid {

GroundPlane estimate_ground_plane(const PointCloud& cloud) {
  if (cloud.size() < 30) throw std::invalid_argument("estimate_ground_plane: need at least 30 points");
  std::vector<std::size_t> order(cloud.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t decile = std::max<std::size_t>(3, cloud.size() / 10);
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(decile), order.end(),
                   [&](std::size_t a, std::size_t b) { return cloud.points[a].z() < cloud.points[b].z(); });

  Eigen::MatrixXd a(decile, 3);
  Eigen::VectorXd z(decile);
  for (std::size_t i = 0; i < decile; ++i) {
    const Vec3& p = cloud.points[order[i]];
    a.row(static_cast<Eigen::Index>(i)) << p.x(), p.y(), 1.0;
    z(static_cast<Eigen::Index>(i)) = p.z();
  }
  const Eigen::Vector3d coef = a.colPivHouseholderQr().solve(z);
  return {coef(0), coef(1), coef(2)};
}

PointCloud remove_ground_plane(const PointCloud& cloud, const GroundHeight& ground, double height_tolerance) {
  PointCloud out;
  out.seed = cloud.seed;
  const bool labelled = cloud.has_sources();
  for (std::size_t k = 0; k < cloud.points.size(); ++k) {
    const Vec3& p = cloud.points[k];
    if (p.z() - ground(p.x(), p.y()) < height_tolerance) continue;
    out.push_back(p, labelled ? cloud.sources[k] : SurfaceKind::kUnknown);
  }
  if (!labelled) out.sources.clear();
  return out;
}

PointCloud remove_ground_plane(const PointCloud& cloud, const GroundPlane& plane, double height_tolerance) {
  return remove_ground_plane(cloud, [&plane](double x, double y) { return plane.height(x, y); },
                             height_tolerance);
}

}  // namespace shadowgrid
