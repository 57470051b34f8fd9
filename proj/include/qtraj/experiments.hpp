#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qtraj/detector.hpp"
#include "qtraj/ensemble.hpp"
#include "qtraj/hamiltonian.hpp"
#include "qtraj/trajectory.hpp"

namespace qtraj {

enum class Experiment { EprUnfiltered, EprFiltered, PhaseSwitch, Cim, OracleCheck };

Experiment parse_experiment(std::string_view name);
std::string to_string(Experiment e);

/// Wavefunction estimator of the CIM success probability.
enum class SignEstimator {
  Quadrant,  // P(++) + P(--) of the conditional state
  MeanSign,  // 1 if sign <x_1> == sign <x_2>
};

struct PhaseSwitch {
  double time = 0.5;
  int mode = 0;  // 0-based
  double phase = 0.0;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::EprUnfiltered;
  double r = 0.5;
  int cutoff = 15;
  std::size_t trajectories = 20000;
  int batches = 100;
  int workers = 1;
  std::uint64_t seed = 1;
  double dt = 0.05;
  double tau_max = 1.0;
  CurrentModel current = CurrentModel::Strat;
  int midpoint_iters = 4;
  bool renorm = true;
  double noise_scale = 1.0;
  std::vector<double> kappas;
  std::vector<double> phases;
  std::optional<PhaseSwitch> phase_switch;
  double bin_width = 0.1;
  double truncation_bound = 1e-6;

  // CIM
  double pump = 2.4;
  double nonlinear_g = 0.6;
  RealMatrix coupling{{0.0, 1.0}, {1.0, 0.0}};
  double coupling_strength = 0.2;
  double output_interval = 0.03;
  SignEstimator estimator = SignEstimator::Quadrant;

  // EPR inference bin and the oracle-check RK4 substeps
  double inference_bin = 1.0;
  int master_substeps = 10;

  int modes() const { return 2; }
  HamiltonianSpec hamiltonian() const;
  PhaseSchedule schedule() const;
  TrajectorySpec trajectory_spec() const;
  EnsembleOptions ensemble_options() const;
  void validate() const;
};

struct RunDiagnostics {
  double max_tail_population = 0.0;
  double max_norm_deviation = 0.0;
  std::size_t nonconverged_steps = 0;
  std::size_t failed_trajectories = 0;
};

/// Formats a bandwidth for observable names: "k10", "k2.5", "kinf".
std::string kappa_label(double kappa);

struct EprResult {
  EnsembleStats currents;      // tau_1..tau_N: j1j2, J1J2_<kappa>
  EnsembleStats wavefunction;  // tau_0..tau_N: x1, x1x2, n1, p1p2
  RunDiagnostics diagnostics;
};

EprResult run_epr(const ExperimentConfig& config);

struct PhaseSwitchResult {
  EnsembleStats switched;   // bin centres: J1J2, J1, J2, J2sq (bin-averaged currents)
  EnsembleStats reference;  // no switch, independent noise (reference_seed)
  double switch_time = 0.0;
  RunDiagnostics diagnostics;
};

/// Seed of the no-switch reference run, so both ensembles are independent.
std::uint64_t reference_seed(std::uint64_t seed);

PhaseSwitchResult run_phase_switch(const ExperimentConfig& config);

struct CimResult {
  EnsembleStats stats;  // success_current_<kappa>, success_wavefunction, success_quadrant, success_mean_sign
  std::vector<std::vector<int>> ground_states;
  RunDiagnostics diagnostics;
};

CimResult run_cim(const ExperimentConfig& config);

/// Variances and covariance of one quadrature pair of binned currents.
struct QuadratureMoments {
  double var1 = 0.0;
  double var2 = 0.0;
  double cov = 0.0;
};

/// V(J_1) - Cov(J_1, J_2)^2 / V(J_2).
double inferred_variance(const QuadratureMoments& m);

enum class EprVerdict { Satisfied, NotSatisfied, Inconclusive };
std::string to_string(EprVerdict v);

struct EprInference {
  double inferred_x = 0.0;
  double inferred_p = 0.0;
  double product = 0.0;
  double stderr_ = 0.0;
  double vacuum_limit = 1.0;
  EprVerdict verdict = EprVerdict::Inconclusive;
  bool satisfied() const { return verdict == EprVerdict::Satisfied; }
  RunDiagnostics diagnostics;
};

/// Runs x-x and p-p measurements, bins the currents over [0, inference_bin]
/// normalized to unit vacuum variance, and tests the inferred-variance
/// product against the vacuum limit 1 at three standard errors.
EprInference epr_inference(const ExperimentConfig& config);

struct CheckResult {
  std::string name;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct OracleCheckResult {
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

/// Master equation vs closed form (deterministic) and SSE ensemble means vs
/// master equation (within 3 sigma) for x1, x1x2 and n1 on the damped TMSS.
OracleCheckResult oracle_check(const ExperimentConfig& config);

}  // namespace qtraj
