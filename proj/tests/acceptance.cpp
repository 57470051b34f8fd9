// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Usage: acceptance [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "qtraj/config.hpp"
#include "qtraj/experiments.hpp"
#include "qtraj/output.hpp"
#include "qtraj/quadrature.hpp"
#include "qtraj/sde.hpp"
#include "qtraj/states.hpp"

using namespace qtraj;

namespace {

const double kHalfPi = std::numbers::pi / 2;
const double kSinh1 = std::sinh(1.0);

// Tolerances and ensemble sizes.
constexpr double kSigmas = 3.0;
constexpr double kIdentityTol = 1e-10;
constexpr double kMasterTol = 1e-6;
constexpr double kExtrapolationTol = 0.01;  // relative, short-time limit
constexpr double kCimBudgetSeconds = 900.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig epr_config(CurrentModel model) {
  ExperimentConfig c = default_config(Experiment::EprUnfiltered);
  c.current = model;
  c.trajectories = 20000;
  c.batches = 100;
  c.phases = {kHalfPi, kHalfPi};  // p-p: the anti-correlated pair
  return c;
}

// 1. Stratonovich currents reproduce -e^{-tau} sinh 1 for the p-p pair.
Outcome fig1() {
  const EprResult res = run_epr(epr_config(CurrentModel::Strat));
  const auto& m = res.currents.mean_of("j1j2");
  const auto& e = res.currents.stderr_of("j1j2");
  double worst = 0.0;
  for (std::size_t t = 0; t < m.size(); ++t) {
    const double ref = -std::exp(-res.currents.tau[t]) * kSinh1;
    worst = std::max(worst, std::abs(m[t] - ref) / e[t]);
  }
  return {worst < kSigmas, "max |<j1j2> + e^-tau sinh1| / stderr = " + fmt(worst) + " over " +
                               std::to_string(m.size()) + " points (< 3)"};
}

// 2 and 3. First grid point of the Ito currents.
Outcome ito_first_point(CurrentModel model, double expected) {
  const EprResult res = run_epr(epr_config(model));
  const double m = res.currents.mean_of("j1j2")[0];
  const double e = res.currents.stderr_of("j1j2")[0];
  const double z = std::abs(m - expected) / e;
  return {z < kSigmas, "<j1j2>(tau_1) = " + fmt(m) + " +- " + fmt(e) + ", expected " + fmt(expected) +
                           ", |z| = " + fmt(z) + " (< 3)"};
}

// 4. Expected midpoint current product after the first step, integrated
// over both Wiener increments with a Gauss-Hermite product rule.
double first_step_correlation(double dt, double r, int cutoff) {
  const FockSpace space = FockSpace::uniform(2, cutoff);
  const StateVector psi0 = tmss({r, cutoff}, space);
  SseDrift drift;
  drift.phases = PhaseVector({kHalfPi, kHalfPi});
  StepConfig cfg;
  cfg.dt = dt;
  cfg.midpoint_iters = 8;
  Stepper stepper(space, drift, cfg);
  const QuadratureRule gh = gauss_hermite(48);
  double total = 0.0;
  std::vector<double> dw(2), j(2);
  for (std::size_t a = 0; a < gh.nodes.size(); ++a) {
    for (std::size_t b = 0; b < gh.nodes.size(); ++b) {
      dw[0] = std::sqrt(2.0 * dt) * gh.nodes[a];
      dw[1] = std::sqrt(2.0 * dt) * gh.nodes[b];
      StateVector psi = psi0;
      stepper.midpoint(psi.amplitudes(), dw, j);
      total += gh.weights[a] * gh.weights[b] * j[0] * j[1];
    }
  }
  return total / std::numbers::pi;
}

Outcome short_time() {
  const double r = 0.5, target = std::sinh(2 * r);
  const std::vector<double> steps{0.05, 0.02, 0.01};
  std::vector<double> c, dev;
  std::string text;
  for (double dt : steps) {
    c.push_back(first_step_correlation(dt, r, 15));
    dev.push_back(std::abs(std::abs(c.back()) - target));
    text += "dt=" + fmt(dt) + ": " + fmt(c.back(), 6) + " ";
  }
  bool monotone = true;
  for (std::size_t i = 1; i < dev.size(); ++i) monotone = monotone && dev[i] < dev[i - 1];
  // Linear Richardson extrapolation from the two smallest steps.
  const double h1 = steps[1], h2 = steps[2];
  const double extrap = (h1 * c[2] - h2 * c[1]) / (h1 - h2);
  const double rel = std::abs(std::abs(extrap) - target) / target;
  return {monotone && rel < kExtrapolationTol,
          text + "| deviation shrinking: " + (monotone ? "yes" : "no") + ", extrapolated " + fmt(extrap, 6) +
              " vs sinh 2r = " + fmt(target, 6) + " (rel " + fmt(rel, 3) + " < 0.01)"};
}

// 5. Master equation vs closed form vs SSE.
Outcome oracle_triangle() {
  ExperimentConfig c = default_config(Experiment::OracleCheck);
  c.trajectories = 10000;
  const OracleCheckResult res = oracle_check(c);
  std::string text;
  bool pass = true;
  for (const CheckResult& ch : res.checks) {
    text += ch.name + "=" + fmt(ch.value, 3) + (ch.pass ? " " : "(fail) ");
    pass = pass && ch.pass;
  }
  pass = pass && res.checks.size() == 4 && res.checks[0].tolerance <= kMasterTol;
  return {pass, text + "(master 1e-6, SSE z < 3)"};
}

// 6. drift_strat = drift_ito + correction on random states.
Outcome identity() {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  const FockSpace sp = FockSpace::uniform(2, 4);
  std::vector<SseDrift> drifts(2);
  drifts[0].phases = PhaseVector({0.2, kHalfPi});
  drifts[1].hamiltonian = HamiltonianSpec::cim(2.4, 0.6, {{0.0, 1.0}, {1.0, 0.0}});
  drifts[1].phases = PhaseVector({0.0, 0.7});
  double worst = 0.0;
  for (const SseDrift& d : drifts) {
    const int nc = d.noise_channels(2);
    for (int t = 0; t < 100; ++t) {
      const StateVector s = testing::random_state(sp, rng, 0.8);
      std::vector<double> xi(nc);
      for (double& v : xi) v = g(rng);
      std::vector<double> j(2), aux(xi.begin() + 2, xi.end());
      for (int k = 0; k < 2; ++k) j[k] = quadrature_expect(s, k, d.phases[k]) + xi[k];
      const StateVector lhs = drift_strat(s, d, j, aux);
      const StateVector ito = drift_ito(s, d, xi);
      const StateVector corr = ito_to_strat_correction(s, d);
      for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs(lhs[i] - ito[i] - corr[i]));
    }
  }
  return {worst < kIdentityTol, "max |strat - ito - correction| = " + fmt(worst, 3) +
                                    " over 200 states, free and CIM (< 1e-10)"};
}

// 7. Finite bandwidth: bias against the wide-band curve vs added noise.
struct FilterRun {
  std::vector<double> tau;
  std::map<double, std::vector<double>> cv_mean, raw_var;
  std::map<double, std::vector<double>> cv_err;
};

FilterRun filter_ensemble(const std::vector<double>& kappas, std::size_t trajectories, double dt, int cutoff,
                          std::uint64_t seed) {
  ExperimentConfig c = default_config(Experiment::EprFiltered);
  c.phases = {kHalfPi, kHalfPi};
  c.dt = dt;
  c.cutoff = cutoff;
  c.kappas = kappas;
  c.trajectories = trajectories;
  c.seed = seed;
  c.validate();
  const FockSpace space = FockSpace::uniform(2, cutoff);
  const StateVector initial = tmss({c.r, cutoff}, space);
  const TrajectorySpec spec = c.trajectory_spec();
  const std::size_t steps = spec.steps();
  const std::size_t nk = kappas.size();

  // Per kappa: J1J2 - N1N2 (N = filtered white noise alone, zero mean), and (J1J2)^2, J1J2.
  std::vector<std::string> names;
  for (double k : kappas) {
    names.push_back("cv_" + kappa_label(k));
    names.push_back("raw_" + kappa_label(k));
    names.push_back("rawsq_" + kappa_label(k));
  }
  std::vector<double> tau;
  for (std::size_t n = 1; n <= steps; ++n) tau.push_back(static_cast<double>(n) * dt);

  auto factory = [&]() -> TrajectoryFn {
    auto integrator = std::make_shared<TrajectoryIntegrator>(space, spec);
    return [&, integrator](std::size_t t, std::span<double> v) {
      const NoiseStream noise(c.seed, t, integrator->noise_channels());
      std::vector<FilterState> white;
      for (double k : kappas) white.emplace_back(2, k);
      std::vector<double> dw(2), xi(2);
      integrator->run(initial, noise, [&](const GridPoint& g) {
        if (g.n == 0) return;
        noise.increments(static_cast<std::int64_t>(g.n) - 1, dt, dw);
        xi[0] = dw[0] / dt;
        xi[1] = dw[1] / dt;
        const std::size_t i = g.n - 1;
        for (std::size_t f = 0; f < nk; ++f) {
          white[f].advance(xi, dt);
          const double jj = g.filtered[2 * f] * g.filtered[2 * f + 1];
          v[(3 * f + 0) * steps + i] = jj - white[f].J[0] * white[f].J[1];
          v[(3 * f + 1) * steps + i] = jj;
          v[(3 * f + 2) * steps + i] = jj * jj;
        }
      });
      return true;
    };
  };
  const EnsembleStats s = run_ensemble(c.ensemble_options(), tau, names, factory);
  FilterRun out;
  out.tau = tau;
  for (std::size_t f = 0; f < nk; ++f) {
    const std::string l = kappa_label(kappas[f]);
    out.cv_mean[kappas[f]] = s.mean_of("cv_" + l);
    out.cv_err[kappas[f]] = s.stderr_of("cv_" + l);
    std::vector<double> var(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      const double m = s.mean_of("raw_" + l)[i];
      var[i] = s.mean_of("rawsq_" + l)[i] - m * m;
    }
    out.raw_var[kappas[f]] = var;
  }
  return out;
}

Outcome filter_tradeoff() {
  const double lo = 10.0, hi = 50.0;
  const FilterRun run = filter_ensemble({lo, hi}, 20000, 0.005, 15, 7);
  auto sup_distance = [&](double k) {
    double d = 0.0;
    for (std::size_t i = 0; i < run.tau.size(); ++i) {
      const double t = run.tau[i];
      if (t < 0.2 - 1e-12) continue;
      d = std::max(d, std::abs(run.cv_mean.at(k)[i] + std::exp(-t) * kSinh1));
    }
    return d;
  };
  auto mean_variance = [&](double k) {
    double s = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < run.tau.size(); ++i) {
      if (run.tau[i] < 0.2 - 1e-12) continue;
      s += run.raw_var.at(k)[i];
      ++n;
    }
    return s / n;
  };
  auto max_err = [&](double k) {
    double e = 0.0;
    for (std::size_t i = 0; i < run.tau.size(); ++i) {
      if (run.tau[i] >= 0.2 - 1e-12) e = std::max(e, run.cv_err.at(k)[i]);
    }
    return e;
  };
  const double d_lo = sup_distance(lo), d_hi = sup_distance(hi);
  const double v_lo = mean_variance(lo), v_hi = mean_variance(hi);

  // Adiabatic limit: kappa dt large makes the exponential update return j.
  FilterState f(2, 1e5);
  bool exact = true;
  const double dt = 0.01;
  for (double j : {0.3, -2.0, 5.5, 1e-3}) {
    const double in[2] = {j, -j};
    f.advance(in, dt);
    exact = exact && f.J[0] == in[0] && f.J[1] == in[1];
  }
  const bool pass = d_hi < d_lo && v_hi > v_lo && exact;
  return {pass, "sup|<J1J2> - wide-band| on [0.2,1]: k10 " + fmt(d_lo) + ", k50 " + fmt(d_hi) +
                    " (max stderr " + fmt(max_err(lo), 3) + ", " + fmt(max_err(hi), 3) +
                    "); noise variance k10 " + fmt(v_lo) + ", k50 " + fmt(v_hi) +
                    "; kappa dt = 1000 gives J == j: " + (exact ? "yes" : "no")};
}

// 8. Phase switch: correlations appear only after the switch, channel 2 unchanged.
Outcome phase_switch() {
  ExperimentConfig c = default_config(Experiment::PhaseSwitch);
  c.trajectories = 10000;
  const PhaseSwitchResult res = run_phase_switch(c);
  const auto& tau = res.switched.tau;
  const auto& m = res.switched.mean_of("J1J2");
  const auto& e = res.switched.stderr_of("J1J2");
  double worst_before = 0.0, weakest_after = 1e300, worst_marginal = 0.0;
  for (std::size_t b = 0; b < tau.size(); ++b) {
    if (tau[b] < res.switch_time) {
      worst_before = std::max(worst_before, std::abs(m[b]) / e[b]);
    } else {
      weakest_after = std::min(weakest_after, -m[b] / e[b]);
    }
    for (const std::string obs : {"J2", "J2sq"}) {
      const double d = res.switched.mean_of(obs)[b] - res.reference.mean_of(obs)[b];
      const double s = std::hypot(res.switched.stderr_of(obs)[b], res.reference.stderr_of(obs)[b]);
      worst_marginal = std::max(worst_marginal, std::abs(d) / s);
    }
  }
  const bool pass = worst_before < kSigmas && weakest_after > kSigmas && worst_marginal < kSigmas;
  return {pass, "before switch max |z| = " + fmt(worst_before) + " (< 3); after switch min -z = " +
                    fmt(weakest_after) + " (> 3); channel-2 marginals max |z| = " + fmt(worst_marginal) + " (< 3)"};
}

// 9. CIM: narrow band agrees with the wavefunction estimate, wide band falls short.
Outcome cim() {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig c = default_config(Experiment::Cim);
  const CimResult res = run_cim(c);
  const double wall = seconds_since(t0);
  const EnsembleStats& s = res.stats;
  const double late = 2.0 / 3.0 * c.tau_max;
  const int wf = s.index_of("success_wavefunction");
  // Late-window average of the paired difference, error from batch spread.
  auto window_diff = [&](const std::string& name) {
    const int cur = s.index_of(name);
    std::vector<double> per_batch(s.batches, 0.0);
    int points = 0;
    for (std::size_t t = 0; t < s.tau.size(); ++t) {
      if (s.tau[t] < late - 1e-9) continue;
      ++points;
      for (int b = 0; b < s.batches; ++b) per_batch[b] += s.batch_mean(b, wf, t) - s.batch_mean(b, cur, t);
    }
    double mean = 0.0;
    for (double& v : per_batch) {
      v /= points;
      mean += v / s.batches;
    }
    double var = 0.0;
    for (double v : per_batch) var += (v - mean) * (v - mean) / (s.batches - 1);
    return Estimate{mean, std::sqrt(var / s.batches)};
  };
  const Estimate d5 = window_diff("success_current_" + kappa_label(5.0));
  const Estimate d50 = window_diff("success_current_" + kappa_label(50.0));
  const bool pass = std::abs(d5.value) < kSigmas * d5.stderr_ && d50.value > kSigmas * d50.stderr_ &&
                    wall < kCimBudgetSeconds;
  const std::size_t last = s.tau.size() - 1;
  return {pass, "tau >= " + fmt(late) + ": P_wf - P_k5 = " + fmt(d5.value, 3) + " +- " + fmt(d5.stderr_, 2) +
                    " (|z| < 3), P_wf - P_k50 = " + fmt(d50.value, 3) + " +- " + fmt(d50.stderr_, 2) +
                    " (z > 3); P_wf(" + fmt(s.tau[last]) + ") = " + fmt(s.mean[wf][last], 3) +
                    "; wall " + fmt(wall, 4) + " s (< 900); max tail " +
                    fmt(res.diagnostics.max_tail_population, 2)};
}

// 10. EPR inference on the first unit of time.
double gaussian_product(double r, double w) {
  // Binned output-field moments of the damped squeezed state.
  const double h = 4.0 * std::pow(1.0 - std::exp(-w / 2.0), 2) / w;
  const double var = 1.0 + (std::cosh(2 * r) - 1.0) * h;
  const double cov = std::sinh(2 * r) * h;
  const double inferred = var - cov * cov / var;
  return inferred * inferred;
}

Outcome epr_criterion() {
  ExperimentConfig c = default_config(Experiment::EprUnfiltered);
  c.trajectories = 20000;
  c.inference_bin = 1.0;
  const EprInference squeezed = epr_inference(c);
  c.r = 0.0;
  const EprInference vacuum = epr_inference(c);
  const bool pass = squeezed.satisfied() && !vacuum.satisfied() && squeezed.vacuum_limit == 1.0;
  return {pass, "r=0.5: product " + fmt(squeezed.product) + " +- " + fmt(squeezed.stderr_, 2) + " (" +
                    to_string(squeezed.verdict) + ", Gaussian prediction " + fmt(gaussian_product(0.5, 1.0)) +
                    "); r=0: " + fmt(vacuum.product) + " +- " + fmt(vacuum.stderr_, 2) + " (" +
                    to_string(vacuum.verdict) + "); vacuum limit 1"};
}

// 11. Same seed and config give byte-identical CSV for any worker count.
std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome reproducibility() {
  const auto dir = std::filesystem::temp_directory_path() / "qtraj_acceptance_repro";
  std::filesystem::remove_all(dir);
  auto write = [&](int workers, std::uint64_t seed, const std::string& tag) {
    ExperimentConfig c = build_config(Experiment::EprFiltered,
                                      {{"trajectories", "400"}, {"batches", "20"}, {"dt", "0.01"}, {"cutoff", "12"},
                                       {"workers", std::to_string(workers)}, {"seed", std::to_string(seed)}});
    const EprResult res = run_epr(c);
    std::string all;
    for (const auto& p : emit_all_csv(res.currents, dir, tag)) all += slurp(p);
    return all;
  };
  const std::string one = write(1, 5, "w1");
  const std::string three = write(3, 5, "w3");
  const std::string again = write(1, 5, "w1b");
  const std::string other = write(1, 6, "s6");
  std::filesystem::remove_all(dir);
  const bool pass = !one.empty() && one == three && one == again && one != other;
  return {pass, "workers 1 vs 3: " + std::string(one == three ? "identical" : "differ") + ", rerun: " +
                    (one == again ? "identical" : "differ") + ", other seed: " + (one != other ? "differs" : "same") +
                    " (" + std::to_string(one.size()) + " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"fig1_stratonovich_correlation", fig1},
      {"ito_same_time_first_point", [] { return ito_first_point(CurrentModel::ItoSame, 0.0); }},
      {"ito_delayed_first_point", [] { return ito_first_point(CurrentModel::ItoDelayed, -2.0 * kSinh1); }},
      {"short_time_limit", short_time},
      {"oracle_triangle", oracle_triangle},
      {"calculus_identity", identity},
      {"filter_bandwidth_tradeoff", filter_tradeoff},
      {"phase_switch", phase_switch},
      {"cim_bandwidth", cim},
      {"epr_inference", epr_criterion},
      {"reproducibility", reproducibility}};

  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& ex) {
      o = {false, std::string("error: ") + ex.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << id << ' ' << criteria[i].first << ": " << o.detail << " ["
              << fmt(seconds_since(t0), 3) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
