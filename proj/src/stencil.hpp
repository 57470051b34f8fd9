#pragma once

// Fused two-mode evaluation of the Stratonovich right-hand side: one pass
// for the moments, one pass for the ladder stencil. Internal to the library.

#include <span>
#include <vector>

#include "qtraj/fock.hpp"
#include "qtraj/hamiltonian.hpp"
#include "qtraj/sde.hpp"

namespace qtraj::detail {

struct TwoModeMoments {
  double norm2 = 0.0;
  cplx a[2], aa[2], a4[2];  // unnormalized <psi|a^k psi>
  double n[2] = {0.0, 0.0};
  double nn1[2] = {0.0, 0.0};  // <n (n - 1)>
  double dropped = 0.0;
};

/// Amplitude coefficients of every stencil term.
struct StencilCoefs {
  cplx diag{0.0, 0.0};
  double diag_n[2] = {0.0, 0.0};
  double diag_nn1[2] = {0.0, 0.0};
  cplx low1[2], low2[2], low4[2], up2[2];
  cplx up11{0.0, 0.0}, low11{0.0, 0.0};
};

class TwoModeStencil {
 public:
  TwoModeStencil(const FockSpace& space, const HamiltonianSpec& hamiltonian);

  using Scratch = StencilScratch;
  /// Zero-initialized scratch; the border must stay zero.
  Scratch make_scratch() const;

  /// Copies psi into the padded buffers and accumulates the moments.
  TwoModeMoments moments(std::span<const cplx> psi, Scratch& scratch, bool higher) const;

  /// out = stencil applied to the state last passed to moments().
  void apply(const StencilCoefs& c, Scratch& scratch, std::span<cplx> out) const;

  double pump() const { return pump_; }
  double coupling() const { return coupling_; }

 private:
  static constexpr int kPad = 4;

  int n0_, n1_;
  std::size_t rows_, width_;
  double pump_ = 0.0, coupling_ = 0.0;  // coupling: coupling_strength * C_01
  bool creates_ = false;
  // Per mode: sqrt((n+1)), sqrt((n+1)(n+2)), sqrt((n+1)...(n+4)), sqrt(n(n-1)), sqrt(n).
  std::vector<double> low1_[2], low2_[2], low4_[2], up2_[2], up1_[2];
};

}  // namespace qtraj::detail
