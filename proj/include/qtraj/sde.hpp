#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtraj/fock.hpp"
#include "qtraj/hamiltonian.hpp"
#include "qtraj/noise.hpp"

namespace qtraj {

namespace detail {
class TwoModeStencil;
/// Split real/imaginary padded copies of a state plus per-column tables.
struct StencilScratch {
  std::vector<double> re, im, columns;
};
}  // namespace detail

enum class Calculus { Ito, Stratonovich };

/// Integration aborted: non-finite amplitudes or truncation budget exceeded.
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything that defines the right-hand side of the conditional SSE.
///
/// Channels: one homodyne-monitored linear loss a_k e^{-i phi_k} per mode
/// (noise channels 0..M-1) and, when the Hamiltonian carries a two-photon
/// loss, one unmonitored diffusive channel sqrt(g^2/2) a_k^2 per mode
/// (noise channels M..2M-1) whose record is discarded.
struct SseDrift {
  HamiltonianSpec hamiltonian;
  PhaseVector phases;
  Calculus calculus = Calculus::Stratonovich;

  int noise_channels(int modes) const {
    return hamiltonian.two_photon_rate() > 0.0 ? 2 * modes : modes;
  }
};

struct StepConfig {
  double dt = 0.05;
  int midpoint_iters = 4;
  bool renorm = true;

  void validate() const;
};

/// In-place SSE right-hand sides for one Fock space, with private scratch
/// storage. One instance per trajectory worker.
class SseKernel {
 public:
  SseKernel(const FockSpace& space, const SseDrift& drift);

  const FockSpace& space() const { return space_; }
  int modes() const { return space_.modes(); }
  int noise_channels() const { return channels_; }
  bool has_unmonitored() const { return two_photon_scale_ > 0.0; }
  void set_phases(const PhaseVector& phases);
  const PhaseVector& phases() const { return drift_.phases; }

  /// Normalized conditional means <x~_k>.
  void expect_x(std::span<const cplx> psi, std::span<double> out);

  /// Ito SSE right-hand side with noise values xi (size noise_channels()).
  void ito_rhs(std::span<const cplx> psi, std::span<const double> xi, std::span<cplx> out);

  /// Stratonovich SSE right-hand side driven by the pseudo-current j
  /// (size M) and, for unmonitored channels, the noise values aux_xi.
  /// If expect_out is non-empty it receives <x~_k> at psi.
  void strat_rhs(std::span<const cplx> psi, std::span<const double> current,
                 std::span<const double> aux_xi, std::span<cplx> out,
                 std::span<double> expect_out = {});

  /// Stratonovich right-hand side with the current formed internally as
  /// j_k = <x~_k>(psi) + xi_k; xi has size noise_channels().
  void strat_rhs_from_noise(std::span<const cplx> psi, std::span<const double> xi,
                            std::span<cplx> out, std::span<double> current_out,
                            std::span<double> expect_out = {});

  /// -1/2 sum_c (B_c . d/dpsi + B_c^* . d/dpsi^*) B_c over every channel,
  /// with B_c = (L_c - <L_c + L_c^dag>/2) psi.
  void correction(std::span<const cplx> psi, std::span<cplx> out);

  /// Noise coefficient vector B_c for channel c.
  void noise_coefficient(std::span<const cplx> psi, int channel, std::span<cplx> out);

  /// Falls back to the per-operator evaluation for two modes (reference
  /// for the fused two-mode path).
  void disable_fused_path() { stencil_.reset(); }

  /// Probability discarded at the cutoff by creation operators in the last
  /// Hamiltonian application.
  double last_dropped() const { return last_dropped_; }

 private:
  struct ModeTerms {
    cplx rot;       // e^{-i phi_k}
    cplx mean_a;    // <a_k>
    cplx mean_aa;   // <a_k^2>
    double mean_n;  // <n_k>
    double x;       // <x~_k>
    double xx;      // <x~_k^2> = 2 Re <a~^2> + 2 <n> + 1
  };

  void prepare(std::span<const cplx> psi);
  void apply_channel_op(int channel, std::span<const cplx> in, std::span<cplx> out);
  void strat_core(std::span<const cplx> psi, std::span<const double> current,
                  std::span<const double> aux_xi, std::span<cplx> out);
  void add_hamiltonian(std::span<const cplx> psi, std::span<cplx> out);
  void add_channel_correction(std::span<const cplx> psi, int channel, std::span<cplx> out);
  void add_unmonitored_ito(std::span<const cplx> psi, int mode, double xi, std::span<cplx> out);
  double channel_mean_x(int channel) const;
  // Two-mode fast path of the Stratonovich right-hand side. `drive` is the
  // current, or the monitored noise when drive_is_noise.
  void strat_fused(std::span<const cplx> psi, std::span<const double> drive, bool drive_is_noise,
                   std::span<const double> aux_xi, std::span<cplx> out, std::span<double> current_out,
                   std::span<double> expect_out);

  FockSpace space_;
  SseDrift drift_;
  HamiltonianOp hamiltonian_;
  int channels_;
  double two_photon_scale_;
  double norm2_ = 1.0;
  std::vector<ModeTerms> terms_;
  std::vector<std::vector<cplx>> a_psi_, aa_psi_, n_psi_;
  std::vector<cplx> b_, lb_, tmp_;
  double last_dropped_ = 0.0;
  std::shared_ptr<const detail::TwoModeStencil> stencil_;
  detail::StencilScratch stencil_scratch_;
};

// Allocating convenience forms of the kernel.
StateVector drift_ito(const StateVector& state, const SseDrift& drift, std::span<const double> xi);
StateVector drift_strat(const StateVector& state, const SseDrift& drift,
                        std::span<const double> current, std::span<const double> aux_xi = {});
StateVector ito_to_strat_correction(const StateVector& state, const SseDrift& drift);

struct StepDiagnostics {
  double raw_norm = 1.0;         // norm before renormalization
  double residual = 0.0;         // midpoint fixed-point relative change
  bool converged = true;
  double dropped = 0.0;
};

/// Reusable stepping engine. Noise arguments are Wiener increments dw with
/// variance dt per channel.
class Stepper {
 public:
  Stepper(const FockSpace& space, const SseDrift& drift, const StepConfig& cfg);

  SseKernel& kernel() { return kernel_; }
  const StepConfig& config() const { return cfg_; }

  StepDiagnostics euler_maruyama(std::span<cplx> psi, std::span<const double> dw);
  /// Semi-implicit midpoint step. `current_out` (size M) receives the
  /// Stratonovich current j^S sampled at the midpoint state;
  /// `expect_out` (size M, optional) the midpoint <x~>.
  StepDiagnostics midpoint(std::span<cplx> psi, std::span<const double> dw,
                           std::span<double> current_out, std::span<double> expect_out = {});

 private:
  void finish(std::span<cplx> psi, StepDiagnostics& diag);

  SseKernel kernel_;
  StepConfig cfg_;
  std::vector<cplx> rhs_, mid_, prev_mid_;
  std::vector<double> xi_, current_, aux_;
};

/// Fixed-point change above which a midpoint step is counted as unconverged.
/// The iteration count is fixed; the residual is reported, not enforced.
inline constexpr double kMidpointTolerance = 1e-3;

StateVector step_euler_maruyama(const StateVector& state, const SseDrift& drift,
                                const NoiseStream& noise, std::int64_t step, const StepConfig& cfg);
StateVector step_euler_maruyama(const StateVector& state, const SseDrift& drift,
                                std::span<const double> dw, const StepConfig& cfg);

struct MidpointResult {
  StateVector state;
  std::vector<double> current;
  StepDiagnostics diagnostics;
};
MidpointResult step_midpoint(const StateVector& state, const SseDrift& drift,
                             const NoiseStream& noise, std::int64_t step, const StepConfig& cfg);
MidpointResult step_midpoint(const StateVector& state, const SseDrift& drift,
                             std::span<const double> dw, const StepConfig& cfg);

}  // namespace qtraj
