// qtraj: command-line front end for the trajectory experiments.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qtraj/config.hpp"
#include "qtraj/experiments.hpp"
#include "qtraj/output.hpp"
#include "qtraj/version.hpp"

namespace fs = std::filesystem;
using namespace qtraj;

namespace {

struct Options {
  std::string config;
  std::optional<std::size_t> trajectories;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<std::string> kappa;
  std::optional<double> r;
  std::optional<std::string> current;
  std::optional<int> workers;
  std::vector<std::string> sets;
  std::string out = "out";
  bool plot = false;
};

void add_options(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "key = value config file");
  sub->add_option("--trajectories", o.trajectories, "number of trajectories");
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--dt", o.dt, "time step");
  sub->add_option("--kappa", o.kappa, "detection bandwidth(s), comma separated, or inf");
  sub->add_option("--r", o.r, "squeezing parameter");
  sub->add_option("--current", o.current, "current model: strat, ito, ito_delayed");
  sub->add_option("--workers", o.workers, "worker threads");
  sub->add_option("--set", o.sets, "extra config setting key=value (repeatable)");
  sub->add_option("--out", o.out, "output directory");
  sub->add_flag("--plot", o.plot, "also write SVG plots");
}

std::vector<Setting> overrides(const Options& o) {
  std::vector<Setting> s;
  if (o.trajectories) s.emplace_back("trajectories", std::to_string(*o.trajectories));
  if (o.seed) s.emplace_back("seed", std::to_string(*o.seed));
  if (o.dt) s.emplace_back("dt", format_number(*o.dt));
  if (o.kappa) s.emplace_back("kappa", *o.kappa);
  if (o.r) s.emplace_back("r", format_number(*o.r));
  if (o.current) s.emplace_back("current", *o.current);
  if (o.workers) s.emplace_back("workers", std::to_string(*o.workers));
  for (const std::string& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    s.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return s;
}

RunManifest manifest_for(const ExperimentConfig& cfg, Experiment e) {
  RunManifest m;
  m.add("experiment", to_string(e));
  m.add("version", std::string(kVersion));
  for (const auto& [k, v] : config_echo(cfg)) m.add(k, v);
  return m;
}

void add_diagnostics(RunManifest& m, const RunDiagnostics& d, double seconds) {
  m.add("wall_time_s", seconds);
  m.add("max_tail_population", d.max_tail_population);
  m.add("max_norm_deviation", d.max_norm_deviation);
  m.add("nonconverged_midpoint_steps", std::to_string(d.nonconverged_steps));
  m.add("failed_trajectories", std::to_string(d.failed_trajectories));
}

PlotSeries series(const EnsembleStats& s, const std::string& name, bool dashed = false) {
  return {name, s.tau, s.mean_of(name), s.stderr_of(name), dashed};
}

int run(Experiment e, const Options& o) {
  const ExperimentConfig cfg =
      parse_config(e, o.config.empty() ? std::nullopt : std::optional<fs::path>(o.config), overrides(o));
  const fs::path dir(o.out);
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  RunManifest manifest = manifest_for(cfg, e);
  const std::string tag = to_string(e);
  int status = 0;

  switch (e) {
    case Experiment::EprUnfiltered:
    case Experiment::EprFiltered: {
      const EprResult res = run_epr(cfg);
      emit_all_csv(res.currents, dir, tag);
      emit_all_csv(res.wavefunction, dir, tag + "_psi");
      add_diagnostics(manifest, res.diagnostics, elapsed());
      if (o.plot) {
        std::vector<PlotSeries> s;
        for (const std::string& n : res.currents.names) s.push_back(series(res.currents, n));
        write_svg_plot(dir / (tag + ".svg"), "current correlation", "tau", s);
      }
      break;
    }
    case Experiment::PhaseSwitch: {
      const PhaseSwitchResult res = run_phase_switch(cfg);
      emit_all_csv(res.switched, dir, tag);
      emit_all_csv(res.reference, dir, tag + "_reference");
      add_diagnostics(manifest, res.diagnostics, elapsed());
      if (o.plot) {
        write_svg_plot(dir / (tag + ".svg"), "binned current correlation", "tau",
                       {series(res.switched, "J1J2"), series(res.reference, "J1J2", true)});
      }
      break;
    }
    case Experiment::Cim: {
      const CimResult res = run_cim(cfg);
      emit_all_csv(res.stats, dir, tag);
      add_diagnostics(manifest, res.diagnostics, elapsed());
      if (o.plot) {
        std::vector<PlotSeries> s;
        for (const std::string& n : res.stats.names) {
          if (n.rfind("success_current_", 0) == 0) s.push_back(series(res.stats, n));
        }
        s.push_back(series(res.stats, "success_wavefunction", true));
        write_svg_plot(dir / (tag + ".svg"), "success probability", "tau", s);
      }
      break;
    }
    case Experiment::OracleCheck: {
      const OracleCheckResult res = oracle_check(cfg);
      for (const CheckResult& c : res.checks) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << format_number(c.value)
                  << " tolerance=" << format_number(c.tolerance) << '\n';
      }
      manifest.add("wall_time_s", elapsed());
      manifest.add("oracle_check", res.all_pass() ? "pass" : "fail");
      status = res.all_pass() ? 0 : 1;
      break;
    }
  }
  manifest.write(dir / (tag + "_manifest.txt"));
  std::cerr << tag << ": done in " << elapsed() << " s, output in " << dir.string() << '\n';
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-trajectory homodyne simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Options opts;
  const std::vector<std::pair<std::string, std::string>> subs{
      {"epr-unfiltered", "wide-band EPR current correlation"},
      {"epr-filtered", "finite-bandwidth EPR current correlation"},
      {"phase-switch", "binned correlations with a local-oscillator phase switch"},
      {"cim", "two-mode coherent Ising machine success probability"},
      {"oracle-check", "master equation vs closed form vs SSE ensemble"}};
  std::vector<CLI::App*> handles;
  for (const auto& [name, help] : subs) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_options(sub, opts);
    handles.push_back(sub);
  }
  CLI11_PARSE(app, argc, argv);

  try {
    for (std::size_t i = 0; i < handles.size(); ++i) {
      if (handles[i]->parsed()) return run(parse_experiment(subs[i].first), opts);
    }
  } catch (const std::exception& ex) {
    std::cerr << "qtraj: " << ex.what() << '\n';
    return 2;
  }
  return 2;
}
