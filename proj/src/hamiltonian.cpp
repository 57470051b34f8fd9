#include "qtraj/hamiltonian.hpp"

#include <cmath>
#include <stdexcept>

namespace qtraj {

HamiltonianSpec HamiltonianSpec::cim(double pump, double g, RealMatrix coupling,
                                     double coupling_strength) {
  HamiltonianSpec h;
  h.kind = Kind::Cim;
  h.pump = pump;
  h.nonlinear_g = g;
  h.coupling = std::move(coupling);
  h.coupling_strength = coupling_strength;
  return h;
}

void HamiltonianSpec::validate(int modes) const {
  if (kind == Kind::Free) return;
  if (!(pump >= 0.0) || !(nonlinear_g >= 0.0)) {
    throw std::invalid_argument("CIM pump and nonlinear decay must be >= 0");
  }
  if (coupling.empty()) return;
  if (static_cast<int>(coupling.size()) != modes) {
    throw std::invalid_argument("coupling matrix must be M x M");
  }
  for (int k = 0; k < modes; ++k) {
    if (static_cast<int>(coupling[k].size()) != modes) {
      throw std::invalid_argument("coupling matrix must be M x M");
    }
    if (coupling[k][k] != 0.0) throw std::invalid_argument("coupling matrix must have zero diagonal");
    for (int j = 0; j < modes; ++j) {
      if (std::abs(coupling[k][j] - coupling[j][k]) > 1e-12) {
        throw std::invalid_argument("coupling matrix must be symmetric");
      }
    }
  }
}

HamiltonianOp::HamiltonianOp(const FockSpace& space, const HamiltonianSpec& spec)
    : space_(space), spec_(spec), tmp1_(space.dimension()), tmp2_(space.dimension()) {
  spec_.validate(space.modes());
}

double HamiltonianOp::apply_add(std::span<const cplx> in, std::span<cplx> out, cplx scale) {
  if (spec_.is_free()) return 0.0;
  const std::size_t dim = space_.dimension();
  double dropped = 0.0;
  const cplx i_unit{0.0, 1.0};

  if (spec_.pump != 0.0) {
    const cplx c = scale * i_unit * (0.5 * spec_.pump);
    for (int k = 0; k < space_.modes(); ++k) {
      dropped += apply_create(space_, k, in, tmp1_);
      dropped += apply_create(space_, k, tmp1_, tmp2_);
      for (std::size_t i = 0; i < dim; ++i) out[i] += c * tmp2_[i];
      apply_annihilate(space_, k, in, tmp1_);
      apply_annihilate(space_, k, tmp1_, tmp2_);
      for (std::size_t i = 0; i < dim; ++i) out[i] -= c * tmp2_[i];
    }
  }

  if (spec_.coupling_strength != 0.0 && !spec_.coupling.empty()) {
    // Symmetric C: the k != j double sum is twice the k < j sum.
    for (int k = 0; k < space_.modes(); ++k) {
      for (int j = k + 1; j < space_.modes(); ++j) {
        const double ckj = spec_.coupling[k][j];
        if (ckj == 0.0) continue;
        const cplx c = scale * i_unit * (spec_.coupling_strength * ckj);
        dropped += apply_create(space_, j, in, tmp1_);
        dropped += apply_create(space_, k, tmp1_, tmp2_);
        for (std::size_t i = 0; i < dim; ++i) out[i] += c * tmp2_[i];
        apply_annihilate(space_, j, in, tmp1_);
        apply_annihilate(space_, k, tmp1_, tmp2_);
        for (std::size_t i = 0; i < dim; ++i) out[i] -= c * tmp2_[i];
      }
    }
  }
  return dropped;
}

}  // namespace qtraj
