#include "qtraj/experiments.hpp"

#include <charconv>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "qtraj/oracle.hpp"
#include "qtraj/states.hpp"

namespace qtraj {

Experiment parse_experiment(std::string_view name) {
  if (name == "epr-unfiltered") return Experiment::EprUnfiltered;
  if (name == "epr-filtered") return Experiment::EprFiltered;
  if (name == "phase-switch") return Experiment::PhaseSwitch;
  if (name == "cim") return Experiment::Cim;
  if (name == "oracle-check") return Experiment::OracleCheck;
  throw std::invalid_argument("unknown experiment '" + std::string(name) + "'");
}

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::EprUnfiltered: return "epr-unfiltered";
    case Experiment::EprFiltered: return "epr-filtered";
    case Experiment::PhaseSwitch: return "phase-switch";
    case Experiment::Cim: return "cim";
    case Experiment::OracleCheck: return "oracle-check";
  }
  return "?";
}

std::string to_string(EprVerdict v) {
  switch (v) {
    case EprVerdict::Satisfied: return "satisfied";
    case EprVerdict::NotSatisfied: return "not_satisfied";
    case EprVerdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

HamiltonianSpec ExperimentConfig::hamiltonian() const {
  if (experiment == Experiment::Cim) return HamiltonianSpec::cim(pump, nonlinear_g, coupling, coupling_strength);
  return HamiltonianSpec::free_evolution();
}

PhaseSchedule ExperimentConfig::schedule() const {
  PhaseSchedule s(PhaseVector(phases), tau_max);
  if (phase_switch) s.add_switch(phase_switch->time, phase_switch->mode, phase_switch->phase);
  return s;
}

TrajectorySpec ExperimentConfig::trajectory_spec() const {
  TrajectorySpec spec;
  spec.hamiltonian = hamiltonian();
  spec.schedule = schedule();
  spec.model = current;
  spec.step.dt = dt;
  spec.step.midpoint_iters = midpoint_iters;
  spec.step.renorm = renorm;
  spec.kappas = kappas;
  spec.truncation_bound = truncation_bound;
  spec.noise_scale = noise_scale;
  spec.keep_record = false;
  return spec;
}

EnsembleOptions ExperimentConfig::ensemble_options() const {
  EnsembleOptions o;
  o.trajectories = trajectories;
  o.batches = batches;
  o.workers = workers;
  return o;
}

void ExperimentConfig::validate() const {
  if (!std::isfinite(r) || r < 0.0) throw std::invalid_argument("squeezing r must be finite and >= 0");
  if (cutoff < 1) throw std::invalid_argument("cutoff must be >= 1");
  if (trajectories == 0) throw std::invalid_argument("trajectories must be > 0");
  if (batches < 2) throw std::invalid_argument("batches must be >= 2");
  if (trajectories % static_cast<std::size_t>(batches) != 0) {
    throw std::invalid_argument("trajectories must be divisible by batches");
  }
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(tau_max > 0.0)) throw std::invalid_argument("tau_max must be > 0");
  for (double k : kappas) {
    if (!(k > 0.0)) throw std::invalid_argument("kappa must be > 0 (or inf)");
  }
  if (phases.size() != 2) throw std::invalid_argument("exactly two local-oscillator phases are required");
  if (phase_switch) {
    if (phase_switch->mode < 0 || phase_switch->mode > 1) throw std::invalid_argument("switch_mode must be 1 or 2");
    if (phase_switch->time < 0.0 || phase_switch->time > tau_max) {
      throw std::invalid_argument("switch_time must lie in [0, tau_max]");
    }
  }
  if (experiment == Experiment::PhaseSwitch && !phase_switch) {
    throw std::invalid_argument("phase-switch experiment needs exactly one switch");
  }
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin_width must be > 0");
  if (!(inference_bin > 0.0)) throw std::invalid_argument("inference_bin must be > 0");
  if (!(output_interval > 0.0)) throw std::invalid_argument("output_interval must be > 0");
  if (pump < 0.0 || nonlinear_g < 0.0) throw std::invalid_argument("pump and nonlinear_g must be >= 0");
  if (master_substeps < 1) throw std::invalid_argument("master_substeps must be >= 1");
  if (!(noise_scale >= 0.0)) throw std::invalid_argument("noise_scale must be >= 0");
  hamiltonian().validate(modes());
  trajectory_spec().validate(modes());
}

std::uint64_t reference_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ULL; }

std::string kappa_label(double kappa) {
  if (kappa == kUnfiltered) return "kinf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, kappa);
  return "k" + std::string(buf, res.ptr);
}

namespace {

// Second-order moments of two modes from three ladder passes.
class MomentProbe {
 public:
  explicit MomentProbe(const FockSpace& space)
      : space_(space), a1_(space.dimension()), a2_(space.dimension()), a12_(space.dimension()) {}

  struct Values {
    double x1, x2, x1x2, p1p2, n1;
  };

  Values operator()(std::span<const cplx> psi) {
    apply_annihilate(space_, 0, psi, a1_);
    apply_annihilate(space_, 1, psi, a2_);
    apply_annihilate(space_, 0, a2_, a12_);
    const double n2 = norm_squared(psi);
    const cplx m1 = inner(psi, a1_) / n2, m2 = inner(psi, a2_) / n2;
    const cplx m12 = inner(psi, a12_) / n2, d12 = inner(a1_, a2_) / n2;
    return {2.0 * m1.real(), 2.0 * m2.real(), 2.0 * (m12.real() + d12.real()),
            2.0 * (d12.real() - m12.real()), norm_squared(a1_) / n2};
  }

 private:
  FockSpace space_;
  std::vector<cplx> a1_, a2_, a12_;
};

// Worst-case diagnostics over all trajectories; order independent.
class DiagnosticsSink {
 public:
  void add(const CurrentRecord& rec) {
    std::lock_guard lock(mutex_);
    d_.max_tail_population = std::max(d_.max_tail_population, rec.max_tail_population);
    d_.max_norm_deviation = std::max(d_.max_norm_deviation, rec.max_norm_deviation);
    d_.nonconverged_steps += rec.nonconverged_steps;
  }
  RunDiagnostics result(const EnsembleStats& s) const {
    RunDiagnostics d = d_;
    d.failed_trajectories = s.failed;
    return d;
  }

 private:
  std::mutex mutex_;
  RunDiagnostics d_;
};

// Runs one trajectory, mapping non-finite state errors to a discard.
template <class Fn>
bool guarded(Fn&& fn) {
  try {
    fn();
    return true;
  } catch (const TruncationError&) {
    throw;
  } catch (const IntegrationError&) {
    return false;
  }
}

EnsembleStats slice(const EnsembleStats& s, const std::vector<std::string>& names, std::size_t t0) {
  EnsembleStats out;
  out.tau.assign(s.tau.begin() + t0, s.tau.end());
  out.names = names;
  out.batches = s.batches;
  out.trajectories = s.trajectories;
  out.failed = s.failed;
  out.batch_counts = s.batch_counts;
  const std::size_t nt = out.tau.size();
  out.batch_means.resize(static_cast<std::size_t>(s.batches) * names.size() * nt);
  for (const std::string& n : names) {
    const int o = s.index_of(n);
    out.mean.emplace_back(s.mean[o].begin() + t0, s.mean[o].end());
    out.stderr_.emplace_back(s.stderr_[o].begin() + t0, s.stderr_[o].end());
  }
  for (int b = 0; b < s.batches; ++b) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      const int o = s.index_of(names[i]);
      for (std::size_t t = 0; t < nt; ++t) {
        out.batch_means[(b * names.size() + i) * nt + t] = s.batch_mean(b, o, t + t0);
      }
    }
  }
  return out;
}

std::vector<double> grid(std::size_t points, double step, std::size_t first = 0) {
  std::vector<double> t;
  for (std::size_t n = first; n < first + points; ++n) t.push_back(static_cast<double>(n) * step);
  return t;
}

}  // namespace

EprResult run_epr(const ExperimentConfig& config) {
  config.validate();
  const FockSpace space = FockSpace::uniform(2, config.cutoff);
  const StateVector initial = tmss({config.r, config.cutoff}, space);
  const TrajectorySpec spec = config.trajectory_spec();
  const std::size_t steps = spec.steps(), nt = steps + 1;
  const std::size_t nf = config.kappas.size();

  std::vector<std::string> current_names{"j1j2"};
  for (double k : config.kappas) current_names.push_back("J1J2_" + kappa_label(k));
  const std::vector<std::string> wave_names{"x1", "x1x2", "n1", "p1p2"};
  std::vector<std::string> names = wave_names;
  names.insert(names.end(), current_names.begin(), current_names.end());

  DiagnosticsSink sink;
  auto factory = [&]() -> TrajectoryFn {
    auto integrator = std::make_shared<TrajectoryIntegrator>(space, spec);
    auto probe = std::make_shared<MomentProbe>(space);
    return [&, integrator, probe](std::size_t t, std::span<double> v) {
      const NoiseStream noise(config.seed, t, integrator->noise_channels());
      return guarded([&] {
        CurrentRecord rec = integrator->run(initial, noise, [&](const GridPoint& g) {
          const MomentProbe::Values m = (*probe)(g.psi);
          v[0 * nt + g.n] = m.x1;
          v[1 * nt + g.n] = m.x1x2;
          v[2 * nt + g.n] = m.n1;
          v[3 * nt + g.n] = m.p1p2;
          if (g.n == 0) return;
          v[4 * nt + g.n] = g.current[0] * g.current[1];
          for (std::size_t f = 0; f < nf; ++f) v[(5 + f) * nt + g.n] = g.filtered[2 * f] * g.filtered[2 * f + 1];
        });
        sink.add(rec);
      });
    };
  };
  EnsembleStats all = run_ensemble(config.ensemble_options(), grid(nt, config.dt), names, factory);

  EprResult res;
  res.wavefunction = slice(all, wave_names, 0);
  res.currents = slice(all, current_names, 1);
  res.diagnostics = sink.result(all);
  return res;
}

namespace {

EnsembleStats run_binned(const ExperimentConfig& config, const FockSpace& space, const StateVector& initial,
                         DiagnosticsSink& sink) {
  TrajectorySpec spec = config.trajectory_spec();
  spec.keep_record = true;
  const auto nbins = static_cast<std::size_t>(std::llround(config.tau_max / config.bin_width));
  std::vector<double> centres;
  for (std::size_t b = 0; b < nbins; ++b) centres.push_back((static_cast<double>(b) + 0.5) * config.bin_width);
  const int filter = config.kappas.empty() ? -1 : 0;

  auto factory = [&]() -> TrajectoryFn {
    auto integrator = std::make_shared<TrajectoryIntegrator>(space, spec);
    return [&, integrator](std::size_t t, std::span<double> v) {
      const NoiseStream noise(config.seed, t, integrator->noise_channels());
      return guarded([&] {
        CurrentRecord rec = integrator->run(initial, noise);
        const std::vector<TimeBin> bins = time_average(rec, config.bin_width, filter);
        for (std::size_t b = 0; b < bins.size(); ++b) {
          const double j1 = bins[b].J[0] / config.bin_width, j2 = bins[b].J[1] / config.bin_width;
          v[0 * nbins + b] = j1 * j2;
          v[1 * nbins + b] = j1;
          v[2 * nbins + b] = j2;
          v[3 * nbins + b] = j2 * j2;
        }
        sink.add(rec);
      });
    };
  };
  return run_ensemble(config.ensemble_options(), centres, {"J1J2", "J1", "J2", "J2sq"}, factory);
}

}  // namespace

PhaseSwitchResult run_phase_switch(const ExperimentConfig& config) {
  config.validate();
  const FockSpace space = FockSpace::uniform(2, config.cutoff);
  const StateVector initial = tmss({config.r, config.cutoff}, space);
  DiagnosticsSink sink;
  PhaseSwitchResult res;
  res.switch_time = config.phase_switch->time;
  res.switched = run_binned(config, space, initial, sink);
  ExperimentConfig ref = config;
  ref.phase_switch.reset();
  ref.experiment = Experiment::EprUnfiltered;
  ref.seed = reference_seed(config.seed);
  res.reference = run_binned(ref, space, initial, sink);
  res.diagnostics = sink.result(res.switched);
  res.diagnostics.failed_trajectories += res.reference.failed;
  return res;
}

CimResult run_cim(const ExperimentConfig& config) {
  config.validate();
  if (config.experiment != Experiment::Cim) throw std::invalid_argument("run_cim needs a CIM configuration");
  const FockSpace space = FockSpace::uniform(2, config.cutoff);
  const StateVector initial = StateVector::vacuum(space);
  const TrajectorySpec spec = config.trajectory_spec();
  const std::size_t steps = spec.steps();
  const double every_ratio = config.output_interval / config.dt;
  const auto every = static_cast<std::size_t>(std::llround(every_ratio));
  if (every == 0 || std::abs(every_ratio - static_cast<double>(every)) > 1e-9 * every_ratio || steps % every != 0) {
    throw std::invalid_argument("output_interval must be a multiple of dt dividing tau_max");
  }
  const std::size_t nt = steps / every;
  const std::size_t nf = config.kappas.size();
  const QuadratureGrid qgrid = QuadratureGrid::half_line(config.cutoff);

  CimResult res;
  res.ground_states = ising_ground_states(config.coupling);
  const double ground = ising_energy(res.ground_states.front(), config.coupling);

  std::vector<std::string> names;
  for (double k : config.kappas) names.push_back("success_current_" + kappa_label(k));
  const std::size_t base = names.size();
  names.insert(names.end(), {"success_wavefunction", "success_quadrant", "success_mean_sign"});

  DiagnosticsSink sink;
  auto factory = [&]() -> TrajectoryFn {
    auto integrator = std::make_shared<TrajectoryIntegrator>(space, spec);
    auto probe = std::make_shared<MomentProbe>(space);
    auto signs = std::make_shared<SignEvaluator>(space, qgrid);
    return [&, integrator, probe, signs](std::size_t t, std::span<double> v) {
      const NoiseStream noise(config.seed, t, integrator->noise_channels());
      return guarded([&] {
        CurrentRecord rec = integrator->run(initial, noise, [&](const GridPoint& g) {
          if (g.n == 0 || g.n % every != 0) return;
          const std::size_t i = g.n / every - 1;
          for (std::size_t f = 0; f < nf; ++f) {
            const int s[2] = {g.filtered[2 * f] >= 0.0 ? 1 : -1, g.filtered[2 * f + 1] >= 0.0 ? 1 : -1};
            v[f * nt + i] = ising_energy(s, config.coupling) <= ground + 1e-12 ? 1.0 : 0.0;
          }
          const double quadrant = (*signs)(g.psi).same();
          const MomentProbe::Values m = (*probe)(g.psi);
          const int s[2] = {m.x1 >= 0.0 ? 1 : -1, m.x2 >= 0.0 ? 1 : -1};
          const double mean_sign = ising_energy(s, config.coupling) <= ground + 1e-12 ? 1.0 : 0.0;
          v[(base + 0) * nt + i] = config.estimator == SignEstimator::Quadrant ? quadrant : mean_sign;
          v[(base + 1) * nt + i] = quadrant;
          v[(base + 2) * nt + i] = mean_sign;
        });
        sink.add(rec);
      });
    };
  };
  res.stats = run_ensemble(config.ensemble_options(), grid(nt, config.output_interval, 1), names, factory);
  res.diagnostics = sink.result(res.stats);
  return res;
}

double inferred_variance(const QuadratureMoments& m) {
  if (!(m.var2 > 0.0)) return m.var1;
  return m.var1 - m.cov * m.cov / m.var2;
}

EprInference epr_inference(const ExperimentConfig& config) {
  config.validate();
  const FockSpace space = FockSpace::uniform(2, config.cutoff);
  const StateVector initial = tmss({config.r, config.cutoff}, space);
  const double w = config.inference_bin;
  const double half_pi = 0.5 * std::numbers::pi;

  DiagnosticsSink sink;
  auto measure = [&](std::vector<double> phases) {
    ExperimentConfig c = config;
    c.phases = std::move(phases);
    c.phase_switch.reset();
    c.tau_max = w;
    c.kappas.clear();
    const TrajectorySpec spec = c.trajectory_spec();
    const double dt = c.dt;
    auto factory = [&]() -> TrajectoryFn {
      auto integrator = std::make_shared<TrajectoryIntegrator>(space, spec);
      return [&, integrator](std::size_t t, std::span<double> v) {
        const NoiseStream noise(c.seed, t, integrator->noise_channels());
        return guarded([&] {
          double j1 = 0.0, j2 = 0.0;
          CurrentRecord rec = integrator->run(initial, noise, [&](const GridPoint& g) {
            if (g.n == 0) return;
            j1 += g.current[0] * dt;
            j2 += g.current[1] * dt;
          });
          j1 /= std::sqrt(w);
          j2 /= std::sqrt(w);
          v[0] = j1;
          v[1] = j2;
          v[2] = j1 * j1;
          v[3] = j2 * j2;
          v[4] = j1 * j2;
          sink.add(rec);
        });
      };
    };
    return run_ensemble(c.ensemble_options(), {w}, {"J1", "J2", "J1sq", "J2sq", "J1J2"}, factory);
  };
  const EnsembleStats xs = measure({0.0, 0.0});
  const EnsembleStats ps = measure({half_pi, half_pi});

  auto moments = [](std::span<const double> m) {
    return QuadratureMoments{m[2] - m[0] * m[0], m[3] - m[1] * m[1], m[4] - m[0] * m[1]};
  };
  std::vector<std::vector<double>> joint(xs.batches, std::vector<double>(10));
  std::vector<std::size_t> counts(xs.batches);
  for (int b = 0; b < xs.batches; ++b) {
    for (int o = 0; o < 5; ++o) {
      joint[b][o] = xs.batch_mean(b, o, 0);
      joint[b][5 + o] = ps.batch_mean(b, o, 0);
    }
    counts[b] = std::min(xs.batch_counts[b], ps.batch_counts[b]);
  }
  const auto product = [&](std::span<const double> m) {
    return inferred_variance(moments(m.first(5))) * inferred_variance(moments(m.subspan(5, 5)));
  };
  const Estimate est = jackknife(joint, counts, product);

  EprInference inf;
  std::vector<double> full(10, 0.0);
  for (int o = 0; o < 5; ++o) {
    full[o] = xs.mean[o][0];
    full[5 + o] = ps.mean[o][0];
  }
  inf.inferred_x = inferred_variance(moments(std::span<const double>(full).first(5)));
  inf.inferred_p = inferred_variance(moments(std::span<const double>(full).subspan(5, 5)));
  inf.product = est.value;
  inf.stderr_ = est.stderr_;
  if (inf.product + 3.0 * inf.stderr_ < inf.vacuum_limit) {
    inf.verdict = EprVerdict::Satisfied;
  } else if (inf.product - 3.0 * inf.stderr_ > inf.vacuum_limit) {
    inf.verdict = EprVerdict::NotSatisfied;
  } else {
    inf.verdict = EprVerdict::Inconclusive;
  }
  inf.diagnostics = sink.result(xs);
  inf.diagnostics.failed_trajectories += ps.failed;
  return inf;
}

bool OracleCheckResult::all_pass() const {
  for (const CheckResult& c : checks) {
    if (!c.pass) return false;
  }
  return !checks.empty();
}

OracleCheckResult oracle_check(const ExperimentConfig& config) {
  config.validate();
  const FockSpace space = FockSpace::uniform(2, config.cutoff);
  const StateVector psi0 = tmss({config.r, config.cutoff}, space);
  const HamiltonianSpec h = HamiltonianSpec::free_evolution();
  const std::vector<LindbladChannel> channels = default_channels(2, h);
  const MasterSeries master =
      integrate_master(DensityMatrix::pure(psi0), h, channels, config.dt, config.tau_max, config.master_substeps);

  const std::vector<std::string> ops{"x1", "x1 x2", "n1"};
  std::vector<std::vector<double>> me(ops.size());
  double worst_analytic = 0.0;
  for (std::size_t t = 0; t < master.tau.size(); ++t) {
    const double tau = master.tau[t];
    const double closed[3] = {0.0, std::exp(-tau) * std::sinh(2.0 * config.r),
                              std::exp(-tau) * std::sinh(config.r) * std::sinh(config.r)};
    for (std::size_t o = 0; o < ops.size(); ++o) {
      me[o].push_back(master.states[t].expect(ops[o]).real());
      worst_analytic = std::max(worst_analytic, std::abs(me[o].back() - closed[o]));
    }
  }

  OracleCheckResult res;
  res.checks.push_back({"master_vs_closed_form", worst_analytic, 0.0, 1e-6, worst_analytic < 1e-6});

  ExperimentConfig sse = config;
  sse.kappas.clear();
  const EprResult run = run_epr(sse);
  const std::string names[3] = {"x1", "x1x2", "n1"};
  for (std::size_t o = 0; o < 3; ++o) {
    const auto& mean = run.wavefunction.mean_of(names[o]);
    const auto& err = run.wavefunction.stderr_of(names[o]);
    double worst = 0.0;
    for (std::size_t t = 0; t < mean.size(); ++t) {
      // Points without spread (tau = 0) are compared at rounding level.
      const double scale = std::max(err[t], 1e-9 / 3.0);
      worst = std::max(worst, std::abs(mean[t] - me[o][t]) / scale);
    }
    res.checks.push_back({"sse_vs_master_" + names[o], worst, 0.0, 3.0, worst < 3.0});
  }
  return res;
}

}  // namespace qtraj
