#include "shadowgrid/shadow_model.hpp"

#include <cmath>
#include <stdexcept>

namespace shadowgrid {

void validate(const ShadowScenario& s) {
  if (!(s.sensor_to_occluder > 0.0) || !std::isfinite(s.sensor_to_occluder)) {
    throw std::invalid_argument("ShadowScenario: sensor_to_occluder must be positive");
  }
  if (!(s.occluder_to_voxel >= 0.0) || !std::isfinite(s.occluder_to_voxel)) {
    throw std::invalid_argument("ShadowScenario: occluder_to_voxel must be non-negative");
  }
  if (!std::isfinite(s.sensor_motion)) {
    throw std::invalid_argument("ShadowScenario: sensor_motion must be finite");
  }
}

double shadow_edge_shift(const ShadowScenario& s) {
  validate(s);
  return s.occluder_to_voxel / s.sensor_to_occluder * s.sensor_motion;
}

double apparent_mean_shift(const ShadowScenario& s) {
  return 0.5 * shadow_edge_shift(s);
}

}  // namespace shadowgrid
