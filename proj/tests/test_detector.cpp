#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qtraj/detector.hpp"
#include "qtraj/noise.hpp"

using namespace qtraj;

namespace {

CurrentRecord constant_record(double dt, std::size_t steps, double j1, double j2) {
  CurrentRecord r;
  r.modes = 2;
  r.dt = dt;
  for (std::size_t n = 0; n <= steps; ++n) r.tau.push_back(n * dt);
  for (std::size_t n = 0; n < steps; ++n) {
    r.current.push_back(j1);
    r.current.push_back(j2);
  }
  r.expect_x.assign(2 * (steps + 1), 0.0);
  return r;
}

}  // namespace

TEST_SUITE("detector") {
  TEST_CASE("current models") {
    const double x[2] = {0.5, -1.0}, now[2] = {2.0, 3.0}, prev[2] = {-4.0, 1.0};
    std::vector<double> s = sample_current(CurrentModel::Strat, x, now);
    CHECK(s[0] == 2.5);
    CHECK(s[1] == 2.0);
    std::vector<double> d = sample_current(CurrentModel::ItoDelayed, x, now, std::span<const double>(prev));
    CHECK(d[0] == -3.5);
    CHECK(d[1] == 0.0);
    CHECK_THROWS(sample_current(CurrentModel::ItoDelayed, x, now));
    CHECK(parse_current_model("ito_delayed") == CurrentModel::ItoDelayed);
    CHECK(calculus_for(CurrentModel::ItoSame) == Calculus::Ito);
    CHECK_THROWS(parse_current_model("fast"));
  }

  TEST_CASE("filter update") {
    FilterState f(1, 4.0);
    const double j[1] = {2.0};
    for (int n = 0; n < 10; ++n) f.advance(j, 0.05);
    CHECK(f.J[0] == doctest::Approx(2.0 * (1.0 - std::exp(-4.0 * 0.5))).epsilon(1e-13));

    FilterState wide(2, kUnfiltered);
    const double jj[2] = {1.5, -0.25};
    wide.advance(jj, 0.01);
    CHECK(wide.J[0] == 1.5);
    CHECK(wide.J[1] == -0.25);
    CHECK_THROWS(FilterState(1, -1.0));
    CHECK_THROWS(FilterState(1, 0.0));
  }

  TEST_CASE("adiabatic limit reproduces the pseudo-current") {
    FilterState f(2, 1e5);
    NoiseStream noise(7, 0, 2);
    std::vector<double> j(2);
    double worst = 0.0;
    for (int n = 0; n < 50; ++n) {
      noise.increments(n, 1.0, j);
      f = filter_step(f, j, 0.01);
      worst = std::max({worst, std::abs(f.J[0] - j[0]), std::abs(f.J[1] - j[1])});
    }
    CHECK(worst == 0.0);
  }

  TEST_CASE("phase schedules") {
    PhaseSchedule s(PhaseVector({0.0, std::numbers::pi / 2}), 1.0);
    s.add_switch(0.5, 1, 0.0);
    CHECK(s.phase_at(0.2)[1] == doctest::Approx(std::numbers::pi / 2));
    CHECK(s.phase_at(0.5)[1] == 0.0);
    CHECK(s.phase_at(1.0)[1] == 0.0);
    CHECK(s.phase_at(0.7)[0] == 0.0);
    CHECK_THROWS(s.phase_at(1.5));
    CHECK_THROWS(s.phase_at(-0.1));
    CHECK(s.switch_times() == std::vector<double>{0.5});

    PhaseSchedule z(PhaseVector({0.0, 0.0}), 1.0);
    z.add_switch(0.0, 0, 1.0);
    CHECK(z.phase_at(0.0)[0] == 1.0);
    CHECK(z.segments().size() == 1);
    CHECK_THROWS(z.add_switch(2.0, 0, 1.0));
    CHECK_THROWS(z.add_switch(0.5, 3, 1.0));
  }

  TEST_CASE("time bins of a constant current") {
    CurrentRecord r = constant_record(0.01, 100, 2.0, -1.0);
    std::vector<TimeBin> bins = time_average(r, 0.1);
    REQUIRE(bins.size() == 10);
    for (const TimeBin& b : bins) {
      CHECK(b.J[0] == doctest::Approx(0.2));
      CHECK(b.J[1] == doctest::Approx(-0.1));
    }
    CHECK(bins[3].start == doctest::Approx(0.3));
    CHECK(bins[3].end == doctest::Approx(0.4));
    CHECK_THROWS(time_average(r, 0.015));
    CHECK_THROWS(time_average(r, 0.3));
    CHECK_THROWS(time_average(r, -0.1));
  }

  TEST_CASE("filtered bins use the trapezoid rule from zero") {
    CurrentRecord r = constant_record(0.1, 4, 0.0, 0.0);
    r.kappas = {5.0};
    r.filtered = {{1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0}};
    std::vector<TimeBin> bins = time_average(r, 0.2, 0);
    CHECK(bins[0].J[0] == doctest::Approx(0.5 * 0.1 * 1.0 + 0.1 * 1.0));
    CHECK(bins[1].J[1] == doctest::Approx(0.4));
  }

  TEST_CASE("integrated white noise has variance equal to the bin width") {
    const int samples = 4000;
    const double dt = 0.01;
    double sum = 0.0, sum2 = 0.0;
    for (int s = 0; s < samples; ++s) {
      NoiseStream noise(3, s, 2);
      CurrentRecord r = constant_record(dt, 50, 0.0, 0.0);
      std::vector<double> dw(2);
      for (int n = 0; n < 50; ++n) {
        noise.increments(n, dt, dw);
        r.current[2 * n] = dw[0] / dt;
        r.current[2 * n + 1] = dw[1] / dt;
      }
      const double j = time_average(r, 0.5)[0].J[0];
      sum += j;
      sum2 += j * j;
    }
    const double mean = sum / samples, var = sum2 / samples - mean * mean;
    CHECK(std::abs(mean) < 4.0 * std::sqrt(0.5 / samples));
    CHECK(var == doctest::Approx(0.5).epsilon(0.08));
  }
}
