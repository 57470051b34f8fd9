#include "qtraj/sde.hpp"

#include <cmath>

#include "stencil.hpp"

namespace qtraj {

void StepConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step size must be > 0");
  if (midpoint_iters < 2) throw std::invalid_argument("midpoint iterations must be >= 2");
}

SseKernel::SseKernel(const FockSpace& space, const SseDrift& drift)
    : space_(space),
      drift_(drift),
      hamiltonian_(space, drift.hamiltonian),
      channels_(drift.noise_channels(space.modes())),
      two_photon_scale_(std::sqrt(drift.hamiltonian.two_photon_rate())),
      terms_(space.modes()),
      a_psi_(space.modes(), std::vector<cplx>(space.dimension())),
      aa_psi_(space.modes(), std::vector<cplx>(space.dimension())),
      n_psi_(space.modes(), std::vector<cplx>(space.dimension())),
      b_(space.dimension()),
      lb_(space.dimension()),
      tmp_(space.dimension()) {
  if (drift_.phases.size() == 0) drift_.phases = PhaseVector::zeros(space.modes());
  set_phases(drift_.phases);
  if (space_.modes() == 2) {
    stencil_ = std::make_shared<detail::TwoModeStencil>(space_, drift_.hamiltonian);
    stencil_scratch_ = stencil_->make_scratch();
  }
}

void SseKernel::set_phases(const PhaseVector& phases) {
  if (static_cast<int>(phases.size()) != space_.modes()) {
    throw std::invalid_argument("phase vector length must equal the number of modes");
  }
  drift_.phases = phases;
  for (int k = 0; k < space_.modes(); ++k) terms_[k].rot = std::polar(1.0, -phases[k]);
}

void SseKernel::prepare(std::span<const cplx> psi) {
  norm2_ = norm_squared(psi);
  const double inv = 1.0 / norm2_;
  for (int k = 0; k < space_.modes(); ++k) {
    ModeTerms& t = terms_[k];
    apply_annihilate(space_, k, psi, a_psi_[k]);
    apply_annihilate(space_, k, a_psi_[k], aa_psi_[k]);
    apply_number(space_, k, psi, n_psi_[k]);
    t.mean_a = inner(psi, a_psi_[k]) * inv;
    t.mean_aa = inner(psi, aa_psi_[k]) * inv;
    t.mean_n = inner(psi, n_psi_[k]).real() * inv;
    t.x = 2.0 * (t.rot * t.mean_a).real();
    t.xx = 2.0 * (t.rot * t.rot * t.mean_aa).real() + 2.0 * t.mean_n + 1.0;
  }
}

double SseKernel::channel_mean_x(int channel) const {
  const int m = space_.modes();
  if (channel < m) return terms_[channel].x;
  return 2.0 * two_photon_scale_ * terms_[channel - m].mean_aa.real();
}

void SseKernel::apply_channel_op(int channel, std::span<const cplx> in, std::span<cplx> out) {
  const int m = space_.modes();
  const std::size_t dim = space_.dimension();
  if (channel < m) {
    apply_annihilate(space_, channel, in, out);
    const cplx rot = terms_[channel].rot;
    for (std::size_t i = 0; i < dim; ++i) out[i] *= rot;
  } else {
    const int k = channel - m;
    apply_annihilate(space_, k, in, tmp_);
    apply_annihilate(space_, k, tmp_, out);
    for (std::size_t i = 0; i < dim; ++i) out[i] *= two_photon_scale_;
  }
}

void SseKernel::add_hamiltonian(std::span<const cplx> psi, std::span<cplx> out) {
  last_dropped_ = hamiltonian_.apply_add(psi, out, cplx{0.0, -1.0});
}

void SseKernel::expect_x(std::span<const cplx> psi, std::span<double> out) {
  const double n2 = norm_squared(psi);
  for (int k = 0; k < space_.modes(); ++k) {
    apply_annihilate(space_, k, psi, a_psi_[k]);
    const cplx mean_a = inner(psi, a_psi_[k]) / n2;
    out[k] = 2.0 * (terms_[k].rot * mean_a).real();
  }
}

void SseKernel::add_unmonitored_ito(std::span<const cplx> psi, int k, double xi,
                                    std::span<cplx> out) {
  // L = s a^2, L^dag L = s^2 n (n - 1).
  const std::size_t dim = space_.dimension();
  const double s = two_photon_scale_;
  const double xbar = channel_mean_x(space_.modes() + k);
  apply_number(space_, k, n_psi_[k], tmp_);
  const double c_lind = -0.5 * s * s;
  const double c_l = s * (0.5 * xbar + xi);
  const double c_psi = -0.125 * xbar * xbar - 0.5 * xbar * xi;
  const auto& aa = aa_psi_[k];
  const auto& nn = n_psi_[k];
  for (std::size_t i = 0; i < dim; ++i) {
    out[i] += c_lind * (tmp_[i] - nn[i]) + c_l * aa[i] + c_psi * psi[i];
  }
}

void SseKernel::ito_rhs(std::span<const cplx> psi, std::span<const double> xi,
                        std::span<cplx> out) {
  if (static_cast<int>(xi.size()) != channels_) throw std::invalid_argument("ito_rhs: noise size mismatch");
  prepare(psi);
  const std::size_t dim = space_.dimension();
  for (std::size_t i = 0; i < dim; ++i) out[i] = 0.0;
  add_hamiltonian(psi, out);
  for (int k = 0; k < space_.modes(); ++k) {
    const ModeTerms& t = terms_[k];
    // (<x~> - a~^dag) a~ / 2 - <x~>^2 / 8 + (a~ - <x~>/2) xi
    const cplx c_a = t.rot * (0.5 * t.x + xi[k]);
    const double c_psi = -0.125 * t.x * t.x - 0.5 * t.x * xi[k];
    const auto& a = a_psi_[k];
    const auto& n = n_psi_[k];
    for (std::size_t i = 0; i < dim; ++i) out[i] += c_a * a[i] - 0.5 * n[i] + c_psi * psi[i];
  }
  if (has_unmonitored()) {
    for (int k = 0; k < space_.modes(); ++k) add_unmonitored_ito(psi, k, xi[space_.modes() + k], out);
  }
}

void SseKernel::strat_core(std::span<const cplx> psi, std::span<const double> current,
                           std::span<const double> aux_xi, std::span<cplx> out) {
  const std::size_t dim = space_.dimension();
  for (std::size_t i = 0; i < dim; ++i) out[i] = 0.0;
  add_hamiltonian(psi, out);
  for (int k = 0; k < space_.modes(); ++k) {
    const ModeTerms& t = terms_[k];
    // (a~ - <x~>/2) j + (<x~^2> - 1)/4 - x~ a~ / 2, with x~ a~ = a~^2 + n
    const cplx c_a = t.rot * current[k];
    const cplx c_aa = -0.5 * t.rot * t.rot;
    const double c_psi = -0.5 * t.x * current[k] + 0.25 * (t.xx - 1.0);
    const auto& a = a_psi_[k];
    const auto& aa = aa_psi_[k];
    const auto& n = n_psi_[k];
    for (std::size_t i = 0; i < dim; ++i) {
      out[i] += c_a * a[i] + c_aa * aa[i] - 0.5 * n[i] + c_psi * psi[i];
    }
  }
  if (has_unmonitored()) {
    const int m = space_.modes();
    if (static_cast<int>(aux_xi.size()) != m) throw std::invalid_argument("strat_rhs: unmonitored noise size mismatch");
    for (int k = 0; k < m; ++k) {
      add_unmonitored_ito(psi, k, aux_xi[k], out);
      add_channel_correction(psi, m + k, out);
    }
  }
}

void SseKernel::strat_rhs(std::span<const cplx> psi, std::span<const double> current,
                          std::span<const double> aux_xi, std::span<cplx> out,
                          std::span<double> expect_out) {
  if (static_cast<int>(current.size()) != space_.modes()) throw std::invalid_argument("strat_rhs: current size mismatch");
  if (stencil_) {
    double j[2];
    strat_fused(psi, current, false, aux_xi, out, j, expect_out);
    return;
  }
  prepare(psi);
  if (!expect_out.empty()) {
    for (int k = 0; k < space_.modes(); ++k) expect_out[k] = terms_[k].x;
  }
  strat_core(psi, current, aux_xi, out);
}

void SseKernel::strat_rhs_from_noise(std::span<const cplx> psi, std::span<const double> xi,
                                     std::span<cplx> out, std::span<double> current_out,
                                     std::span<double> expect_out) {
  if (static_cast<int>(xi.size()) != channels_) throw std::invalid_argument("strat_rhs: noise size mismatch");
  const int m = space_.modes();
  if (stencil_) {
    strat_fused(psi, xi.first(m), true, xi.subspan(m), out, current_out, expect_out);
    return;
  }
  prepare(psi);
  for (int k = 0; k < m; ++k) {
    current_out[k] = terms_[k].x + xi[k];
    if (!expect_out.empty()) expect_out[k] = terms_[k].x;
  }
  strat_core(psi, current_out.first(m), xi.subspan(m), out);
}

void SseKernel::strat_fused(std::span<const cplx> psi, std::span<const double> drive, bool drive_is_noise,
                            std::span<const double> aux_xi, std::span<cplx> out,
                            std::span<double> current_out, std::span<double> expect_out) {
  const bool two_photon = has_unmonitored();
  if (two_photon && static_cast<int>(aux_xi.size()) != 2) {
    throw std::invalid_argument("strat_rhs: unmonitored noise size mismatch");
  }
  detail::StencilScratch& scratch = stencil_scratch_;
  const detail::TwoModeMoments mo = stencil_->moments(psi, scratch, two_photon);
  last_dropped_ = mo.dropped;
  norm2_ = mo.norm2;
  const double inv = 1.0 / norm2_;
  const double s = two_photon_scale_;
  const double half_pump = 0.5 * stencil_->pump();

  detail::StencilCoefs c;
  c.up11 = stencil_->coupling();
  c.low11 = -stencil_->coupling();
  for (int k = 0; k < 2; ++k) {
    ModeTerms& t = terms_[k];
    t.mean_a = mo.a[k] * inv;
    t.mean_aa = mo.aa[k] * inv;
    t.mean_n = mo.n[k] * inv;
    t.x = 2.0 * (t.rot * t.mean_a).real();
    t.xx = 2.0 * (t.rot * t.rot * t.mean_aa).real() + 2.0 * t.mean_n + 1.0;
    const double j = drive_is_noise ? t.x + drive[k] : drive[k];
    current_out[k] = j;
    if (!expect_out.empty()) expect_out[k] = t.x;

    c.low1[k] = t.rot * j;
    c.low2[k] = -0.5 * t.rot * t.rot - half_pump;
    c.up2[k] = half_pump;
    c.low4[k] = 0.0;
    c.diag_n[k] = -0.5;
    c.diag += -0.5 * t.x * j + 0.25 * (t.xx - 1.0);
    if (two_photon) {
      // Unmonitored a^2 channel in Ito form plus its Stratonovich correction.
      const double xbar = 2.0 * s * t.mean_aa.real();
      const double xi = aux_xi[k];
      const double dx = 2.0 * s * s * ((mo.a4[k] * inv).real() + mo.nn1[k] * inv) - xbar * xbar;
      c.low2[k] += s * (0.5 * xbar + xi) + 0.5 * xbar * s;
      c.low4[k] = -0.5 * s * s;
      c.diag_nn1[k] = -0.5 * s * s;
      c.diag += -0.125 * xbar * xbar - 0.5 * xbar * xi + 0.25 * dx - 0.125 * xbar * xbar;
    }
  }
  stencil_->apply(c, scratch, out);
}

void SseKernel::add_channel_correction(std::span<const cplx> psi, int channel,
                                       std::span<cplx> out) {
  const std::size_t dim = space_.dimension();
  const int m = space_.modes();
  const double xbar = channel_mean_x(channel);
  const std::vector<cplx>& lpsi_src = channel < m ? a_psi_[channel] : aa_psi_[channel - m];
  const cplx lscale = channel < m ? terms_[channel].rot : cplx{two_photon_scale_, 0.0};

  // B = L psi - <X>/2 psi
  for (std::size_t i = 0; i < dim; ++i) b_[i] = lscale * lpsi_src[i] - 0.5 * xbar * psi[i];
  apply_channel_op(channel, b_, lb_);

  // Directional derivative of <X> along B: 2 Re(<psi|L B> + <L psi|B>) / |psi|^2
  cplx lpsi_b{0.0, 0.0};
  {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const cplx l = lscale * lpsi_src[i];
      const cplx v = std::conj(l) * b_[i];
      re += v.real();
      im += v.imag();
    }
    lpsi_b = {re, im};
  }
  const double dx = 2.0 * (inner(psi, lb_) + lpsi_b).real() / norm2_;

  // out += -1/2 (L B - <X>/2 B - dX/2 psi)
  const double c_b = 0.25 * xbar;
  const double c_psi = 0.25 * dx;
  for (std::size_t i = 0; i < dim; ++i) out[i] += -0.5 * lb_[i] + c_b * b_[i] + c_psi * psi[i];
}

void SseKernel::correction(std::span<const cplx> psi, std::span<cplx> out) {
  prepare(psi);
  for (std::size_t i = 0; i < space_.dimension(); ++i) out[i] = 0.0;
  for (int c = 0; c < channels_; ++c) add_channel_correction(psi, c, out);
}

void SseKernel::noise_coefficient(std::span<const cplx> psi, int channel, std::span<cplx> out) {
  if (channel < 0 || channel >= channels_) throw std::out_of_range("noise channel out of range");
  prepare(psi);
  apply_channel_op(channel, psi, out);
  const double xbar = channel_mean_x(channel);
  for (std::size_t i = 0; i < space_.dimension(); ++i) out[i] -= 0.5 * xbar * psi[i];
}

StateVector drift_ito(const StateVector& state, const SseDrift& drift, std::span<const double> xi) {
  SseKernel kernel(state.space(), drift);
  StateVector out(state.space());
  kernel.ito_rhs(state.amplitudes(), xi, out.amplitudes());
  return out;
}

StateVector drift_strat(const StateVector& state, const SseDrift& drift,
                        std::span<const double> current, std::span<const double> aux_xi) {
  SseKernel kernel(state.space(), drift);
  StateVector out(state.space());
  std::vector<double> aux(aux_xi.begin(), aux_xi.end());
  if (kernel.has_unmonitored() && aux.empty()) aux.assign(state.space().modes(), 0.0);
  kernel.strat_rhs(state.amplitudes(), current, aux, out.amplitudes());
  return out;
}

StateVector ito_to_strat_correction(const StateVector& state, const SseDrift& drift) {
  SseKernel kernel(state.space(), drift);
  StateVector out(state.space());
  kernel.correction(state.amplitudes(), out.amplitudes());
  return out;
}

Stepper::Stepper(const FockSpace& space, const SseDrift& drift, const StepConfig& cfg)
    : kernel_(space, drift),
      cfg_(cfg),
      rhs_(space.dimension()),
      mid_(space.dimension()),
      prev_mid_(space.dimension()),
      xi_(kernel_.noise_channels()),
      current_(space.modes()),
      aux_(kernel_.noise_channels() - space.modes()) {
  cfg_.validate();
}

void Stepper::finish(std::span<cplx> psi, StepDiagnostics& diag) {
  const double n2 = norm_squared(psi);
  if (!std::isfinite(n2) || !(n2 > 0.0)) {
    throw IntegrationError("non-finite or vanishing state after SSE step (dt = " +
                           std::to_string(cfg_.dt) + ")");
  }
  diag.raw_norm = std::sqrt(n2);
  diag.dropped = kernel_.last_dropped();
  if (cfg_.renorm) {
    const double inv = 1.0 / diag.raw_norm;
    for (cplx& z : psi) z *= inv;
  }
}

StepDiagnostics Stepper::euler_maruyama(std::span<cplx> psi, std::span<const double> dw) {
  const double dt = cfg_.dt;
  for (std::size_t c = 0; c < xi_.size(); ++c) xi_[c] = dw[c] / dt;
  kernel_.ito_rhs(psi, xi_, rhs_);
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] += dt * rhs_[i];
  StepDiagnostics diag;
  finish(psi, diag);
  return diag;
}

StepDiagnostics Stepper::midpoint(std::span<cplx> psi, std::span<const double> dw,
                                  std::span<double> current_out, std::span<double> expect_out) {
  const double dt = cfg_.dt;
  const std::size_t dim = psi.size();
  for (std::size_t c = 0; c < xi_.size(); ++c) xi_[c] = dw[c] / dt;
  std::copy(psi.begin(), psi.end(), mid_.begin());
  for (int it = 0; it < cfg_.midpoint_iters; ++it) {
    kernel_.strat_rhs_from_noise(mid_, xi_, rhs_, current_, expect_out);
    std::swap(mid_, prev_mid_);
    for (std::size_t i = 0; i < dim; ++i) mid_[i] = psi[i] + (0.5 * dt) * rhs_[i];
  }
  StepDiagnostics diag;
  double change = 0.0;
  for (std::size_t i = 0; i < dim; ++i) change += std::norm(mid_[i] - prev_mid_[i]);
  diag.residual = std::sqrt(change / norm_squared(psi));
  diag.converged = diag.residual <= kMidpointTolerance;
  for (std::size_t i = 0; i < dim; ++i) psi[i] = 2.0 * mid_[i] - psi[i];
  std::copy(current_.begin(), current_.end(), current_out.begin());
  finish(psi, diag);
  return diag;
}

StateVector step_euler_maruyama(const StateVector& state, const SseDrift& drift,
                                std::span<const double> dw, const StepConfig& cfg) {
  if (drift.calculus != Calculus::Ito) throw std::invalid_argument("Euler-Maruyama step needs Ito calculus");
  Stepper stepper(state.space(), drift, cfg);
  StateVector out = state;
  stepper.euler_maruyama(out.amplitudes(), dw);
  return out;
}

StateVector step_euler_maruyama(const StateVector& state, const SseDrift& drift,
                                const NoiseStream& noise, std::int64_t step, const StepConfig& cfg) {
  std::vector<double> dw(noise.channels());
  noise.increments(step, cfg.dt, dw);
  return step_euler_maruyama(state, drift, dw, cfg);
}

MidpointResult step_midpoint(const StateVector& state, const SseDrift& drift,
                             std::span<const double> dw, const StepConfig& cfg) {
  if (drift.calculus != Calculus::Stratonovich) throw std::invalid_argument("midpoint step needs Stratonovich calculus");
  Stepper stepper(state.space(), drift, cfg);
  MidpointResult res{state, std::vector<double>(state.space().modes()), {}};
  res.diagnostics = stepper.midpoint(res.state.amplitudes(), dw, res.current);
  return res;
}

MidpointResult step_midpoint(const StateVector& state, const SseDrift& drift,
                             const NoiseStream& noise, std::int64_t step, const StepConfig& cfg) {
  std::vector<double> dw(noise.channels());
  noise.increments(step, cfg.dt, dw);
  return step_midpoint(state, drift, dw, cfg);
}

}  // namespace qtraj
