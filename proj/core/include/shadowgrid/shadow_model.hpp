#pragma once

// Closed-form model of how a moving occluder shadow biases a voxel mean.
// A thin occluder at distance rho_l from the sensor shadows a voxel rho_v
// behind it. Moving the sensor by delta slides the shadow edge by
// (rho_v / rho_l) * delta, and with a uniform point density across the voxel
// the first moment moves by half of that.
//
// The model is a validation oracle only; the matcher never consults it.

namespace shadowgrid {

struct ShadowScenario {
  double sensor_to_occluder = 0.0;  // rho_l, meters, > 0
  double occluder_to_voxel = 0.0;   // rho_v, meters, >= 0
  double sensor_motion = 0.0;       // delta, meters, measured parallel to the edge shift
};

/// Throws std::invalid_argument if rho_l <= 0 or rho_v < 0.
void validate(const ShadowScenario& s);

double shadow_edge_shift(const ShadowScenario& s);
double apparent_mean_shift(const ShadowScenario& s);

}  // namespace shadowgrid
