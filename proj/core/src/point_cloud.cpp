#include "shadowgrid/point_cloud.hpp"

namespace shadowgrid {

PointCloud transformed(const PointCloud& cloud, const RigidTransform& t) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) out.points.push_back(t.apply(p));
  out.sources = cloud.sources;
  out.seed = cloud.seed;
  return out;
}

}  // namespace shadowgrid
