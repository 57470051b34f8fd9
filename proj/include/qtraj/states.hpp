#pragma once

#include "qtraj/fock.hpp"

namespace qtraj {

struct SqueezeParams {
  double r = 0.5;
  int cutoff = 15;
};

/// Two-mode squeezed vacuum truncated at the cutoff and renormalized over the
/// truncated basis. The space must have two modes with equal cutoffs.
StateVector tmss(const SqueezeParams& params, const FockSpace& space);

/// 1 - sum_{n<=cutoff} tanh(r)^{2n}/cosh(r)^2: probability lost by truncation
/// before renormalization.
double tmss_norm_deficit(double r, int cutoff);

/// Closed-form moments of the freely damped two-mode squeezed state.
/// `xx_self` and `pp_self` follow the published formula e^{-tau} cosh 2r;
/// the master-equation value of <x_i^2> is 1 + e^{-tau}(cosh 2r - 1).
struct MomentRecord {
  double xx = 0.0;
  double pp = 0.0;
  double xx_self = 0.0;
  double pp_self = 0.0;
};

MomentRecord analytic_moments(double r, double tau);

}  // namespace qtraj
