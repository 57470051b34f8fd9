#include "qtraj/oracle.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qtraj/quadrature.hpp"
#include "qtraj/sde.hpp"

namespace qtraj {

namespace {

using SparseC = Eigen::SparseMatrix<cplx>;
using DenseC = Eigen::MatrixXcd;
using RowMap = Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMap = Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Builds the sparse matrix of a linear map from its action on basis vectors.
template <class Apply>
SparseC tabulate(const FockSpace& space, Apply&& apply) {
  const std::size_t d = space.dimension();
  std::vector<Eigen::Triplet<cplx>> entries;
  std::vector<cplx> e(d), col(d);
  for (std::size_t j = 0; j < d; ++j) {
    std::fill(e.begin(), e.end(), cplx{});
    std::fill(col.begin(), col.end(), cplx{});
    e[j] = 1.0;
    apply(e, col);
    for (std::size_t i = 0; i < d; ++i) {
      if (col[i] != cplx{}) entries.emplace_back(static_cast<int>(i), static_cast<int>(j), col[i]);
    }
  }
  SparseC m(static_cast<int>(d), static_cast<int>(d));
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

class Liouvillian {
 public:
  Liouvillian(const FockSpace& space, const HamiltonianSpec& hamiltonian,
              std::span<const LindbladChannel> channels) {
    HamiltonianOp hop(space, hamiltonian);
    SparseC h = tabulate(space, [&](std::span<const cplx> in, std::span<cplx> out) {
      hop.apply_add(in, out, 1.0);
    });
    SparseC damping(h.rows(), h.cols());
    std::vector<cplx> tmp(space.dimension());
    for (const LindbladChannel& ch : channels) {
      space.check_mode(ch.mode);
      SparseC l = tabulate(space, [&](std::span<const cplx> in, std::span<cplx> out) {
        if (ch.kind == LindbladChannel::Kind::Loss) {
          apply_annihilate(space, ch.mode, in, out);
        } else {
          apply_annihilate(space, ch.mode, in, tmp);
          apply_annihilate(space, ch.mode, tmp, out);
        }
      });
      jumps_.push_back(l);
      rates_.push_back(ch.rate);
      SparseC ldl = SparseC(l.adjoint()) * l;
      damping += ch.rate * ldl;
    }
    heff_ = h - cplx(0.0, 0.5) * damping;
    heff_adj_ = SparseC(heff_.adjoint());
  }

  DenseC operator()(const DenseC& rho) const {
    const cplx mi(0.0, -1.0);
    DenseC out = mi * (heff_ * rho);
    out += -mi * (rho * heff_adj_);
    for (std::size_t c = 0; c < jumps_.size(); ++c) {
      DenseC lr = jumps_[c] * rho;
      out += rates_[c] * (lr * SparseC(jumps_[c].adjoint()));
    }
    return out;
  }

 private:
  SparseC heff_, heff_adj_;
  std::vector<SparseC> jumps_;
  std::vector<double> rates_;
};

DenseC to_dense(const DensityMatrix& rho) {
  const auto d = static_cast<Eigen::Index>(rho.dimension());
  return ConstRowMap(rho.data().data(), d, d);
}

DensityMatrix from_dense(const FockSpace& space, const DenseC& m) {
  DensityMatrix rho(space);
  const auto d = static_cast<Eigen::Index>(rho.dimension());
  RowMap(rho.data().data(), d, d) = m;
  return rho;
}

}  // namespace

DensityMatrix::DensityMatrix(FockSpace space)
    : space_(std::move(space)), data_(space_.dimension() * space_.dimension()) {}

DensityMatrix DensityMatrix::pure(const StateVector& state) {
  DensityMatrix rho(state.space());
  const std::size_t d = rho.dimension();
  const double n2 = state.norm_squared();
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) rho(i, j) = state[i] * std::conj(state[j]) / n2;
  }
  return rho;
}

cplx DensityMatrix::trace() const {
  cplx t{};
  for (std::size_t i = 0; i < dimension(); ++i) t += (*this)(i, i);
  return t;
}

cplx DensityMatrix::expect(const OperatorProduct& op) const {
  const std::size_t d = dimension();
  cplx t{};
  StateVector column(space_);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < d; ++i) column[i] = (*this)(i, j);
    StateVector o = op.apply(column);
    t += o[j];
  }
  return t;
}

cplx DensityMatrix::expect(std::string_view op_text) const {
  return expect(OperatorProduct::parse(op_text));
}

double DensityMatrix::hermiticity_error() const {
  double err = 0.0;
  for (std::size_t i = 0; i < dimension(); ++i) {
    for (std::size_t j = 0; j < i + 1; ++j) err = std::max(err, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
  }
  return err;
}

double DensityMatrix::min_eigenvalue() const {
  DenseC m = to_dense(*this);
  DenseC h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseC> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

std::vector<LindbladChannel> default_channels(int modes, const HamiltonianSpec& hamiltonian) {
  std::vector<LindbladChannel> ch;
  for (int k = 0; k < modes; ++k) ch.push_back({LindbladChannel::Kind::Loss, k, 1.0});
  const double g2 = hamiltonian.two_photon_rate();
  if (g2 > 0.0) {
    for (int k = 0; k < modes; ++k) ch.push_back({LindbladChannel::Kind::TwoPhotonLoss, k, g2});
  }
  return ch;
}

DensityMatrix master_rhs(const DensityMatrix& rho, const HamiltonianSpec& hamiltonian,
                         std::span<const LindbladChannel> channels) {
  Liouvillian lv(rho.space(), hamiltonian, channels);
  return from_dense(rho.space(), lv(to_dense(rho)));
}

MasterSeries integrate_master(const DensityMatrix& rho0, const HamiltonianSpec& hamiltonian,
                              std::span<const LindbladChannel> channels, double output_dt,
                              double tau_max, int substeps) {
  if (!(output_dt > 0.0) || !(tau_max >= 0.0) || substeps < 1) {
    throw std::invalid_argument("integrate_master: bad time grid");
  }
  const double ratio = tau_max / output_dt;
  const auto outputs = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(outputs)) > 1e-9 * std::max(ratio, 1.0)) {
    throw std::invalid_argument("integrate_master: tau_max is not a multiple of the output step");
  }
  hamiltonian.validate(rho0.space().modes());
  Liouvillian lv(rho0.space(), hamiltonian, channels);
  const double h = output_dt / substeps;

  MasterSeries series;
  DenseC rho = to_dense(rho0);
  series.tau.push_back(0.0);
  series.states.push_back(rho0);
  for (std::size_t out = 1; out <= outputs; ++out) {
    for (int s = 0; s < substeps; ++s) {
      DenseC k1 = lv(rho);
      DenseC k2 = lv(rho + (0.5 * h) * k1);
      DenseC k3 = lv(rho + (0.5 * h) * k2);
      DenseC k4 = lv(rho + h * k3);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    const double drift = std::abs(rho.trace() - cplx(1.0));
    if (!(drift <= 1e-8)) {
      std::ostringstream msg;
      msg << "master equation trace drifted by " << drift << " at tau = " << out * output_dt;
      throw IntegrationError(msg.str());
    }
    series.tau.push_back(static_cast<double>(out) * output_dt);
    series.states.push_back(from_dense(rho0.space(), rho));
  }
  return series;
}

std::vector<double> hermite_functions(int max_level, double q) {
  std::vector<double> phi(max_level + 1);
  phi[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * q * q);
  if (max_level >= 1) phi[1] = std::sqrt(2.0) * q * phi[0];
  for (int n = 1; n < max_level; ++n) {
    phi[n + 1] = std::sqrt(2.0 / (n + 1)) * q * phi[n] - std::sqrt(static_cast<double>(n) / (n + 1)) * phi[n - 1];
  }
  return phi;
}

QuadratureGrid QuadratureGrid::half_line(int max_level, int nodes_per_half, double extent) {
  if (max_level < 0) throw std::invalid_argument("quadrature grid needs max_level >= 0");
  if (extent <= 0.0) extent = std::sqrt(2.0 * max_level + 1.0) + 9.0;
  if (nodes_per_half <= 0) nodes_per_half = 2 * max_level + 60;
  QuadratureGrid grid;
  grid.max_level = max_level;
  for (double sign : {-1.0, 1.0}) {
    QuadratureRule rule = gauss_legendre(nodes_per_half, 0.0, extent);
    for (int i = 0; i < nodes_per_half; ++i) {
      grid.points.push_back(sign * rule.nodes[i]);
      grid.weights.push_back(rule.weights[i]);
    }
  }
  const std::size_t np = grid.points.size();
  grid.hermite_table.assign((max_level + 1) * np, 0.0);
  for (std::size_t i = 0; i < np; ++i) {
    std::vector<double> phi = hermite_functions(max_level, grid.points[i]);
    for (int n = 0; n <= max_level; ++n) grid.hermite_table[n * np + i] = phi[n];
  }
  if (grid.normalization_error() > 1e-8) {
    throw std::runtime_error("quadrature grid does not resolve the number-state wavefunctions");
  }
  return grid;
}

double QuadratureGrid::normalization_error() const {
  double err = 0.0;
  for (int n = 0; n <= max_level; ++n) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) s += weights[i] * wavefunction(n, i) * wavefunction(n, i);
    err = std::max(err, std::abs(s - 1.0));
  }
  return err;
}

std::vector<double> QuadratureGrid::half_overlap(bool positive) const {
  const int n = max_level + 1;
  std::vector<double> k(static_cast<std::size_t>(n) * n, 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if ((points[i] > 0.0) != positive) continue;
    for (int a = 0; a < n; ++a) {
      const double wa = weights[i] * wavefunction(a, i);
      for (int b = 0; b < n; ++b) k[a * n + b] += wa * wavefunction(b, i);
    }
  }
  return k;
}

namespace {

std::vector<double> truncate_overlap(const std::vector<double>& full, int full_n, int n) {
  std::vector<double> k(static_cast<std::size_t>(n) * n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) k[a * n + b] = full[a * full_n + b];
  }
  return k;
}

}  // namespace

SignEvaluator::SignEvaluator(const FockSpace& space, const QuadratureGrid& grid) {
  if (space.modes() != 2) throw std::invalid_argument("sign probabilities need a two-mode space");
  n1_ = space.cutoff(0) + 1;
  n2_ = space.cutoff(1) + 1;
  if (std::max(n1_, n2_) > grid.max_level + 1) {
    throw std::invalid_argument("quadrature grid does not cover the Fock cutoff");
  }
  const int full = grid.max_level + 1;
  const std::vector<double> kp = grid.half_overlap(true), km = grid.half_overlap(false);
  k1p_ = truncate_overlap(kp, full, n1_);
  k1m_ = truncate_overlap(km, full, n1_);
  k2p_ = truncate_overlap(kp, full, n2_);
  k2m_ = truncate_overlap(km, full, n2_);
  right_p_.resize(static_cast<std::size_t>(n1_) * n2_);
  right_m_.resize(right_p_.size());
}

SignProbabilities SignEvaluator::operator()(std::span<const cplx> psi) {
  // Right factor: R^s = C K2^s, then P(s1, s2) = sum conj(C) o (K1^s1 R^s2).
  for (int i = 0; i < n1_; ++i) {
    for (int b = 0; b < n2_; ++b) {
      cplx sp{}, sm{};
      for (int a = 0; a < n2_; ++a) {
        const cplx c = psi[i * n2_ + a];
        sp += c * k2p_[a * n2_ + b];
        sm += c * k2m_[a * n2_ + b];
      }
      right_p_[i * n2_ + b] = sp;
      right_m_[i * n2_ + b] = sm;
    }
  }
  SignProbabilities p;
  double norm = 0.0;
  for (int m = 0; m < n1_; ++m) {
    for (int b = 0; b < n2_; ++b) {
      cplx tpp{}, tpm{}, tmp{}, tmm{};
      for (int i = 0; i < n1_; ++i) {
        const double kp = k1p_[m * n1_ + i], km = k1m_[m * n1_ + i];
        tpp += kp * right_p_[i * n2_ + b];
        tpm += kp * right_m_[i * n2_ + b];
        tmp += km * right_p_[i * n2_ + b];
        tmm += km * right_m_[i * n2_ + b];
      }
      const cplx c = std::conj(psi[m * n2_ + b]);
      norm += std::norm(psi[m * n2_ + b]);
      p.pp += (c * tpp).real();
      p.pm += (c * tpm).real();
      p.mp += (c * tmp).real();
      p.mm += (c * tmm).real();
    }
  }
  p.pp /= norm;
  p.pm /= norm;
  p.mp /= norm;
  p.mm /= norm;
  return p;
}

SignProbabilities sign_probabilities(const StateVector& state, const QuadratureGrid& grid) {
  SignEvaluator eval(state.space(), grid);
  return eval(state.amplitudes());
}

double ising_energy(std::span<const int> spins, const RealMatrix& coupling) {
  if (coupling.size() != spins.size()) throw std::invalid_argument("ising_energy: size mismatch");
  double e = 0.0;
  for (std::size_t k = 0; k < spins.size(); ++k) {
    if (coupling[k].size() != spins.size()) throw std::invalid_argument("ising_energy: coupling not square");
    for (std::size_t j = 0; j < spins.size(); ++j) e -= coupling[k][j] * spins[k] * spins[j];
  }
  return e;
}

std::vector<std::vector<int>> ising_ground_states(const RealMatrix& coupling) {
  const std::size_t m = coupling.size();
  if (m == 0 || m > 20) throw std::invalid_argument("ising_ground_states: need 1..20 spins");
  std::vector<std::vector<int>> ground;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> s(m);
  for (std::uint32_t bits = 0; bits < (1u << m); ++bits) {
    for (std::size_t k = 0; k < m; ++k) s[k] = (bits >> k) & 1u ? -1 : 1;
    const double e = ising_energy(s, coupling);
    if (e < best - 1e-12) {
      best = e;
      ground.clear();
    }
    if (e <= best + 1e-12) ground.push_back(s);
  }
  return ground;
}

}  // namespace qtraj
