#include "vdyn/tire.hpp"

#include <algorithm>
#include <cmath>

namespace vdyn {

double magic_formula(double B, double C, double E, double slip) {
  const double Bs = B * slip;
  return std::sin(C * std::atan(Bs - E * (Bs - std::atan(Bs))));
}

TireForce tire_forces(double tau, double alpha, double F_z, double mu,
                      const TireParams& tire) {
  if (F_z <= 0.0 || mu <= 0.0) {
    return {};
  }
  const double D = mu * F_z;
  const double B_x = tire.k_x / (tire.C_x * mu);
  const double B_y = tire.k_y / (tire.C_y * mu);
  const double F_x0 = D * magic_formula(B_x, tire.C_x, tire.E_x, tau);
  const double F_y0 = D * magic_formula(B_y, tire.C_y, tire.E_y, alpha);

  const double B_xa = tire.r_bx1 * std::cos(std::atan(tire.r_bx2 * tau));
  const double B_yk = tire.r_by1 * std::cos(std::atan(tire.r_by2 * alpha));
  // C > 1 can push the cosine negative at extreme slip; a weight never flips
  // the force direction.
  const double G_xa =
      std::max(0.0, std::cos(tire.C_xa * std::atan(B_xa * alpha)));
  const double G_yk = std::max(0.0, std::cos(tire.C_yk * std::atan(B_yk * tau)));

  TireForce f{G_xa * F_x0, G_yk * F_y0};
  const double norm = std::hypot(f.F_xw, f.F_yw);
  if (norm > D) {
    const double scale = D / norm;
    f.F_xw *= scale;
    f.F_yw *= scale;
  }
  return f;
}

}  // namespace vdyn
