#include "qtraj/states.hpp"

#include <cmath>

namespace qtraj {

StateVector tmss(const SqueezeParams& params, const FockSpace& space) {
  if (space.modes() != 2) throw FockError("two-mode squeezed state needs exactly 2 modes");
  if (space.cutoff(0) != space.cutoff(1)) throw FockError("two-mode squeezed state needs equal cutoffs");
  if (!std::isfinite(params.r) || params.r < 0.0) throw FockError("squeezing parameter must be finite and >= 0");
  if (params.cutoff != space.cutoff(0)) throw FockError("squeeze cutoff does not match the Fock space");

  StateVector psi(space);
  const double t = std::tanh(params.r);
  const double c = 1.0 / std::cosh(params.r);
  double coeff = c;
  for (int n = 0; n <= params.cutoff; ++n) {
    const int occ[2] = {n, n};
    psi[space.index(occ)] = coeff;
    coeff *= t;
  }
  psi.normalize();
  return psi;
}

double tmss_norm_deficit(double r, int cutoff) {
  const double t2 = std::tanh(r) * std::tanh(r);
  // Geometric tail sum_{n>cutoff} t2^n / cosh^2 r = t2^{cutoff+1}
  return std::pow(t2, cutoff + 1);
}

MomentRecord analytic_moments(double r, double tau) {
  if (tau < 0.0) throw std::invalid_argument("analytic_moments: tau must be >= 0");
  const double decay = std::exp(-tau);
  MomentRecord m;
  m.xx = decay * std::sinh(2.0 * r);
  m.pp = -m.xx;
  m.xx_self = decay * std::cosh(2.0 * r);
  m.pp_self = m.xx_self;
  return m;
}

}  // namespace qtraj
