#pragma once

#include "vdyn/vehicle.hpp"

namespace vdyn {

struct TireForce {
  double F_xw = 0.0;
  double F_yw = 0.0;
};

// Pure-slip Magic Formula shape, normalised to [-1, 1].
double magic_formula(double B, double C, double E, double slip);

// Wheel-frame forces for slip ratio tau, slip angle alpha (rad), normal load
// F_z (N) and friction coefficient mu. The result always satisfies
// hypot(F_xw, F_yw) <= mu * F_z: after the cosine interaction weights the
// force vector is scaled back onto the friction circle if it leaves it.
TireForce tire_forces(double tau, double alpha, double F_z, double mu,
                      const TireParams& tire);

}  // namespace vdyn
