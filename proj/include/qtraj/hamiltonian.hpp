#pragma once

#include <vector>

#include "qtraj/fock.hpp"

namespace qtraj {

using RealMatrix = std::vector<std::vector<double>>;

/// Dimensionless Hamiltonian H/gamma plus the CIM nonlinear loss parameter.
///
/// Cim: H = i(lambda/2) sum_j (a_j^dag^2 - a_j^2)
///        + i(coupling_strength/2) sum_{k!=j} C_kj (a_k^dag a_j^dag - a_k a_j)
/// The coupling term is an assumed form: the two-mode parametric interaction
/// drives x_k by +coupling_strength * C_kj * x_j, i.e. a ferromagnetic x-x
/// coupling for positive C. Two-photon loss a_j^2 enters with rate g^2/2.
struct HamiltonianSpec {
  enum class Kind { Free, Cim };

  Kind kind = Kind::Free;
  double pump = 0.0;
  double nonlinear_g = 0.0;
  RealMatrix coupling;
  double coupling_strength = 0.2;

  static HamiltonianSpec free_evolution() { return {}; }
  static HamiltonianSpec cim(double pump, double g, RealMatrix coupling,
                             double coupling_strength = 0.2);

  void validate(int modes) const;
  bool is_free() const { return kind == Kind::Free; }
  double two_photon_rate() const { return kind == Kind::Cim ? 0.5 * nonlinear_g * nonlinear_g : 0.0; }
};

/// Applies H to vectors of one Fock space using private scratch storage.
class HamiltonianOp {
 public:
  HamiltonianOp(const FockSpace& space, const HamiltonianSpec& spec);

  /// out += scale * H in. Returns the probability discarded at the cutoff by
  /// the creation operators (unscaled, summed over terms).
  double apply_add(std::span<const cplx> in, std::span<cplx> out, cplx scale);

  const HamiltonianSpec& spec() const { return spec_; }

 private:
  FockSpace space_;
  HamiltonianSpec spec_;
  std::vector<cplx> tmp1_, tmp2_;
};

}  // namespace qtraj
