#pragma once

#include <span>
#include <vector>

#include "qtraj/fock.hpp"
#include "qtraj/hamiltonian.hpp"

namespace qtraj {

/// Dense density matrix on a Fock space, row-major.
class DensityMatrix {
 public:
  explicit DensityMatrix(FockSpace space);
  static DensityMatrix pure(const StateVector& state);

  const FockSpace& space() const { return space_; }
  std::size_t dimension() const { return space_.dimension(); }
  cplx& operator()(std::size_t i, std::size_t j) { return data_[i * dimension() + j]; }
  cplx operator()(std::size_t i, std::size_t j) const { return data_[i * dimension() + j]; }
  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }

  cplx trace() const;
  /// Tr(O rho).
  cplx expect(const OperatorProduct& op) const;
  cplx expect(std::string_view op_text) const;
  double hermiticity_error() const;
  double min_eigenvalue() const;

 private:
  FockSpace space_;
  std::vector<cplx> data_;
};

struct LindbladChannel {
  enum class Kind { Loss, TwoPhotonLoss };
  Kind kind;
  int mode;
  double rate;
};

/// Unit-rate linear loss on every mode, plus two-photon loss when the
/// Hamiltonian carries one.
std::vector<LindbladChannel> default_channels(int modes, const HamiltonianSpec& hamiltonian);

DensityMatrix master_rhs(const DensityMatrix& rho, const HamiltonianSpec& hamiltonian,
                         std::span<const LindbladChannel> channels);

struct MasterSeries {
  std::vector<double> tau;
  std::vector<DensityMatrix> states;
};

/// RK4 integration of the Lindblad equation, recording every output_dt up to
/// tau_max. The internal step is output_dt / substeps. Aborts if the trace
/// drifts from 1 by more than 1e-8.
MasterSeries integrate_master(const DensityMatrix& rho0, const HamiltonianSpec& hamiltonian,
                              std::span<const LindbladChannel> channels, double output_dt,
                              double tau_max, int substeps = 10);

/// Split Gauss-Legendre grid on [-L, 0] and [0, L] in the dimensionless
/// position q = x / sqrt(2), with the number-state wavefunctions tabulated.
/// Splitting at the origin makes half-line integrals exact up to the rule's
/// polynomial accuracy, which a Gauss-Hermite grid cannot do for a sign step.
struct QuadratureGrid {
  std::vector<double> points;
  std::vector<double> weights;
  int max_level = 0;
  std::vector<double> hermite_table;  // (max_level + 1) x points

  static QuadratureGrid half_line(int max_level, int nodes_per_half = 0, double extent = 0.0);

  double wavefunction(int n, std::size_t i) const { return hermite_table[n * points.size() + i]; }
  /// max_n |sum_i w_i phi_n(q_i)^2 - 1|.
  double normalization_error() const;
  /// K_mn = integral over q > 0 (or q < 0) of phi_m phi_n, (max_level + 1)^2.
  std::vector<double> half_overlap(bool positive) const;
};

/// Normalized number-state wavefunctions phi_0..phi_max at q.
std::vector<double> hermite_functions(int max_level, double q);

struct SignProbabilities {
  double pp = 0.0, pm = 0.0, mp = 0.0, mm = 0.0;
  double same() const { return pp + mm; }
  double total() const { return pp + pm + mp + mm; }
};

/// Probabilities of the sign pairs of the x quadratures of a two-mode state.
/// Reuses precomputed half-overlaps; one evaluator per worker.
class SignEvaluator {
 public:
  explicit SignEvaluator(const FockSpace& space, const QuadratureGrid& grid);
  SignProbabilities operator()(std::span<const cplx> psi);

 private:
  int n1_, n2_;
  std::vector<double> k1p_, k1m_, k2p_, k2m_;
  std::vector<cplx> right_p_, right_m_;
};

SignProbabilities sign_probabilities(const StateVector& state, const QuadratureGrid& grid);

/// E = -sum_{k,j} C_kj sigma_k sigma_j.
double ising_energy(std::span<const int> spins, const RealMatrix& coupling);
/// All minimum-energy spin configurations, by enumeration.
std::vector<std::vector<int>> ising_ground_states(const RealMatrix& coupling);

}  // namespace qtraj
