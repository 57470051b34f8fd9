#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "qtraj/ensemble.hpp"
#include "qtraj/noise.hpp"
#include "qtraj/sde.hpp"

using namespace qtraj;

namespace {

// Each trajectory reports one Gaussian draw and its square at two times.
WorkerFactory gaussian_factory(double sigma) {
  return [sigma] {
    return [sigma](std::size_t t, std::span<double> v) {
      const NoiseStream ns(11, t, 1);
      std::vector<double> dw(1);
      ns.increments(0, 1.0, dw);
      v[0] = sigma * dw[0];
      v[1] = 2.0;
      v[2] = dw[0] * dw[0];
      v[3] = static_cast<double>(t);
      return true;
    };
  };
}

EnsembleStats run_gaussian(std::size_t n, int batches, int workers, double sigma = 1.0) {
  EnsembleOptions o;
  o.trajectories = n;
  o.batches = batches;
  o.workers = workers;
  return run_ensemble(o, {0.0, 1.0}, {"g", "gsq"}, gaussian_factory(sigma));
}

}  // namespace

TEST_SUITE("ensemble") {
  TEST_CASE("results are independent of the worker count") {
    const EnsembleStats a = run_gaussian(4000, 40, 1);
    const EnsembleStats b = run_gaussian(4000, 40, 3);
    CHECK(a.mean == b.mean);
    CHECK(a.stderr_ == b.stderr_);
    CHECK(a.trajectories == 4000);
  }

  TEST_CASE("means and batch standard error by hand") {
    const EnsembleStats s = run_gaussian(600, 6, 1);
    CHECK(s.mean_of("g")[1] == doctest::Approx(2.0));
    CHECK(s.mean_of("gsq")[1] == doctest::Approx(299.5));
    CHECK(s.stderr_of("g")[1] == doctest::Approx(0.0));

    std::vector<double> bm(6, 0.0);
    for (int b = 0; b < 6; ++b) {
      for (int t = b * 100; t < (b + 1) * 100; ++t) {
        const NoiseStream ns(11, t, 1);
        std::vector<double> dw(1);
        ns.increments(0, 1.0, dw);
        bm[b] += dw[0] / 100.0;
      }
      CHECK(s.batch_mean(b, 0, 0) == doctest::Approx(bm[b]).epsilon(1e-12));
    }
    double mu = 0.0;
    for (double v : bm) mu += v / 6.0;
    double var = 0.0;
    for (double v : bm) var += (v - mu) * (v - mu) / 5.0;
    CHECK(s.mean_of("g")[0] == doctest::Approx(mu).epsilon(1e-12));
    CHECK(s.stderr_of("g")[0] == doctest::Approx(std::sqrt(var / 6.0)).epsilon(1e-12));
  }

  TEST_CASE("standard error tracks sigma over root n") {
    const EnsembleStats s1 = run_gaussian(20000, 100, 1);
    const EnsembleStats s4 = run_gaussian(80000, 100, 1);
    CHECK(s1.stderr_of("g")[0] == doctest::Approx(1.0 / std::sqrt(20000.0)).epsilon(0.2));
    CHECK(s1.stderr_of("g")[0] / s4.stderr_of("g")[0] == doctest::Approx(2.0).epsilon(0.25));
    CHECK(std::abs(s1.mean_of("gsq")[0] - 1.0) < 4.0 * s1.stderr_of("gsq")[0]);
  }

  TEST_CASE("discarded trajectories") {
    EnsembleOptions o;
    o.trajectories = 10000;
    o.batches = 10;
    o.max_failure_fraction = 1e-3;
    auto every = [](std::size_t k) {
      return [k] {
        return [k](std::size_t t, std::span<double> v) {
          v[0] = 1.0;
          return t % k != 0;
        };
      };
    };
    const EnsembleStats s = run_ensemble(o, {0.0}, {"one"}, every(1000));
    CHECK(s.failed == 10);
    CHECK(s.trajectories == 9990);
    CHECK(s.mean_of("one")[0] == 1.0);
    CHECK_THROWS_AS(run_ensemble(o, {0.0}, {"one"}, every(500)), IntegrationError);
  }

  TEST_CASE("worker exceptions propagate") {
    EnsembleOptions o;
    o.trajectories = 100;
    o.batches = 10;
    o.workers = 2;
    WorkerFactory bad = [] {
      return [](std::size_t t, std::span<double>) -> bool {
        if (t == 57) throw std::runtime_error("boom");
        return true;
      };
    };
    CHECK_THROWS_WITH_AS(run_ensemble(o, {0.0}, {"x"}, bad), "boom", std::runtime_error);
  }

  TEST_CASE("options validation") {
    EnsembleOptions o;
    o.trajectories = 0;
    CHECK_THROWS(o.validate());
    o.trajectories = 101;
    o.batches = 10;
    CHECK_THROWS(o.validate());
    o.trajectories = 100;
    o.batches = 1;
    CHECK_THROWS(o.validate());
    o.batches = 10;
    o.workers = 0;
    CHECK_THROWS(o.validate());
  }

  TEST_CASE("jackknife of a linear function equals the batch error") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<std::vector<double>> bv(50, std::vector<double>(2));
    std::vector<std::size_t> counts(50, 20);
    for (auto& b : bv) {
      b[0] = nd(rng);
      b[1] = nd(rng);
    }
    const Estimate e = jackknife(bv, counts, [](std::span<const double> m) { return 3.0 * m[0] - m[1]; });
    double mu = 0.0;
    std::vector<double> y;
    for (const auto& b : bv) y.push_back(3.0 * b[0] - b[1]);
    for (double v : y) mu += v / 50.0;
    double var = 0.0;
    for (double v : y) var += (v - mu) * (v - mu) / 49.0;
    CHECK(e.value == doctest::Approx(mu).epsilon(1e-12));
    CHECK(e.stderr_ == doctest::Approx(std::sqrt(var / 50.0)).epsilon(1e-10));
    CHECK_THROWS(jackknife({{1.0}}, {1}, [](std::span<const double> m) { return m[0]; }));
  }
}
