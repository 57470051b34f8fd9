#include "qtraj/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qtraj {

namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights are mu0
// times the squared first eigenvector components.
QuadratureRule golub_welsch(const Eigen::VectorXd& offdiag, int n, double mu0) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    jacobi(i, i + 1) = offdiag(i);
    jacobi(i + 1, i) = offdiag(i);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success) throw std::runtime_error("quadrature eigen-solve failed");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    const double v = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v * v;
  }
  return rule;
}

}  // namespace

QuadratureRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("Gauss-Hermite rule needs n >= 1");
  Eigen::VectorXd off(std::max(n - 1, 1));
  for (int i = 0; i + 1 < n; ++i) off(i) = std::sqrt(0.5 * (i + 1));
  return golub_welsch(off, n, std::sqrt(std::numbers::pi));
}

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("Gauss-Legendre rule needs n >= 1");
  if (!(b > a)) throw std::invalid_argument("Gauss-Legendre interval must have b > a");
  Eigen::VectorXd off(std::max(n - 1, 1));
  for (int i = 0; i + 1 < n; ++i) {
    const double k = i + 1;
    off(i) = k / std::sqrt(4.0 * k * k - 1.0);
  }
  QuadratureRule rule = golub_welsch(off, n, 2.0);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

}  // namespace qtraj
