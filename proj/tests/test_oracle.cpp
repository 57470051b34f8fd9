#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qtraj/oracle.hpp"
#include "qtraj/quadrature.hpp"
#include "qtraj/states.hpp"

using namespace qtraj;

namespace {

double phi0_at_origin(int n) {
  if (n % 2) return 0.0;
  double v = std::pow(std::numbers::pi, -0.25);
  for (int k = 1; k <= n / 2; ++k) v *= -std::sqrt((2.0 * k - 1.0) / (2.0 * k));
  return v;
}

double dphi_at_origin(int n) {
  double d = 0.0;
  if (n > 0) d += std::sqrt(n / 2.0) * phi0_at_origin(n - 1);
  d -= std::sqrt((n + 1) / 2.0) * phi0_at_origin(n + 1);
  return d;
}

// Integral of phi_m phi_n over q > 0, from the Wronskian of the oscillator equation.
double half_overlap_closed(int m, int n) {
  if (m == n) return 0.5;
  const double w = phi0_at_origin(n) * dphi_at_origin(m) - phi0_at_origin(m) * dphi_at_origin(n);
  return w / (2.0 * (m - n));
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("Gauss-Hermite moments") {
    const QuadratureRule gh = gauss_hermite(20);
    for (int k = 0; k < 20; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < gh.nodes.size(); ++i) s += gh.weights[i] * std::pow(gh.nodes[i], 2 * k);
      CHECK(s == doctest::Approx(std::tgamma(k + 0.5)).epsilon(1e-10));
    }
  }

  TEST_CASE("Gauss-Legendre integrates polynomials exactly") {
    const QuadratureRule gl = gauss_legendre(8, 0.0, 2.0);
    for (int k = 0; k < 16; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) s += gl.weights[i] * std::pow(gl.nodes[i], k);
      CHECK(s == doctest::Approx(std::pow(2.0, k + 1) / (k + 1)).epsilon(1e-12));
    }
    CHECK_THROWS(gauss_legendre(0));
  }

  TEST_CASE("number-state wavefunctions") {
    const auto f = hermite_functions(6, 0.0);
    for (int n = 0; n <= 6; ++n) CHECK(f[n] == doctest::Approx(phi0_at_origin(n)).epsilon(1e-12));
    const double q = 0.7;
    const auto g = hermite_functions(2, q);
    const double g0 = std::pow(std::numbers::pi, -0.25) * std::exp(-q * q / 2);
    CHECK(g[1] == doctest::Approx(std::sqrt(2.0) * q * g0));
    CHECK(g[2] == doctest::Approx((2 * q * q - 1) / std::sqrt(2.0) * g0));
  }

  TEST_CASE("half-line overlaps") {
    const QuadratureGrid grid = QuadratureGrid::half_line(12);
    CHECK(grid.normalization_error() < 1e-10);
    const auto kp = grid.half_overlap(true);
    const auto km = grid.half_overlap(false);
    const int d = 13;
    for (int m = 0; m < d; ++m) {
      for (int n = 0; n < d; ++n) {
        CHECK(kp[m * d + n] == doctest::Approx(half_overlap_closed(m, n)).epsilon(1e-9));
        CHECK(kp[m * d + n] + km[m * d + n] == doctest::Approx(m == n ? 1.0 : 0.0).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("sign probabilities") {
    const QuadratureGrid grid = QuadratureGrid::half_line(30);
    const FockSpace sp = FockSpace::uniform(2, 30);
    const SignProbabilities vac = sign_probabilities(StateVector::vacuum(sp), grid);
    CHECK(vac.pp == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(vac.pm == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(vac.mm == doctest::Approx(0.25).epsilon(1e-12));

    for (double r : {0.2, 0.5, 0.8}) {
      const SignProbabilities p = sign_probabilities(tmss({r, 30}, sp), grid);
      CHECK(p.total() == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(p.same() == doctest::Approx(0.5 + std::asin(std::tanh(2 * r)) / std::numbers::pi).epsilon(1e-8));
      CHECK(p.pp == doctest::Approx(p.mm).epsilon(1e-10));
    }

    // A displaced-looking superposition with <x> > 0 must favour positive signs.
    StateVector psi(sp);
    psi[0] = 1.0;
    psi[sp.stride(0)] = 1.0;
    psi.normalize();
    SignEvaluator eval(sp, grid);
    const SignProbabilities s = eval(psi.amplitudes());
    CHECK(s.pp + s.pm > 0.5);
    CHECK(s.pp + s.mp == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("master equation: damped squeezed state") {
    const double r = 0.5;
    const FockSpace sp = FockSpace::uniform(2, 14);
    const HamiltonianSpec h = HamiltonianSpec::free_evolution();
    const auto ch = default_channels(2, h);
    const MasterSeries ms = integrate_master(DensityMatrix::pure(tmss({r, 14}, sp)), h, ch, 0.1, 1.0);
    REQUIRE(ms.states.size() == 11);
    for (std::size_t i = 0; i < ms.states.size(); ++i) {
      const double t = ms.tau[i];
      const DensityMatrix& rho = ms.states[i];
      CHECK(std::abs(rho.trace() - 1.0) < 1e-10);
      CHECK(rho.hermiticity_error() < 1e-12);
      CHECK(std::abs(rho.expect("x1")) < 1e-12);
      CHECK(rho.expect("x1 x2").real() == doctest::Approx(std::exp(-t) * std::sinh(2 * r)).epsilon(1e-5));
      CHECK(rho.expect("n1").real() == doctest::Approx(std::exp(-t) * std::pow(std::sinh(r), 2)).epsilon(1e-5));
    }
  }

  TEST_CASE("master equation: single photon decay") {
    const FockSpace sp = FockSpace::uniform(1, 3);
    const int one[] = {1};
    const auto ch = default_channels(1, HamiltonianSpec::free_evolution());
    const MasterSeries ms = integrate_master(DensityMatrix::pure(StateVector::basis(sp, one)),
                                             HamiltonianSpec::free_evolution(), ch, 0.25, 2.0);
    for (std::size_t i = 0; i < ms.states.size(); ++i) {
      CHECK(ms.states[i].expect("n1").real() == doctest::Approx(std::exp(-ms.tau[i])).epsilon(1e-9));
      CHECK(ms.states[i](0, 0).real() == doctest::Approx(1.0 - std::exp(-ms.tau[i])).epsilon(1e-9));
    }
  }

  TEST_CASE("master equation: CIM stays a density matrix") {
    const FockSpace sp = FockSpace::uniform(2, 8);
    const HamiltonianSpec h = HamiltonianSpec::cim(2.4, 0.6, {{0.0, 1.0}, {1.0, 0.0}});
    const auto ch = default_channels(2, h);
    CHECK(ch.size() == 4);
    const MasterSeries ms = integrate_master(DensityMatrix::pure(StateVector::vacuum(sp)), h, ch, 0.1, 0.5, 20);
    for (const DensityMatrix& rho : ms.states) {
      CHECK(std::abs(rho.trace() - 1.0) < 1e-9);
      CHECK(rho.min_eigenvalue() > -1e-9);
    }
    // Pumping with positive coupling builds x1 x2 correlations.
    CHECK(ms.states.back().expect("x1 x2").real() > 0.0);
  }

  TEST_CASE("Ising brute force") {
    const RealMatrix ferro{{0.0, 1.0}, {1.0, 0.0}};
    const int up[] = {1, 1}, mixed[] = {1, -1};
    CHECK(ising_energy(up, ferro) == -2.0);
    CHECK(ising_energy(mixed, ferro) == 2.0);
    const auto gs = ising_ground_states(ferro);
    REQUIRE(gs.size() == 2);
    for (const auto& s : gs) CHECK(s[0] == s[1]);
    const auto anti = ising_ground_states({{0.0, -1.0}, {-1.0, 0.0}});
    REQUIRE(anti.size() == 2);
    for (const auto& s : anti) CHECK(s[0] == -s[1]);
  }
}
