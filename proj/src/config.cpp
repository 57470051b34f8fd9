#include "qtraj/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace qtraj {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view why = {}) {
  std::string msg = "invalid value '" + std::string(value) + "' for " + std::string(key);
  if (!why.empty()) msg += ": " + std::string(why);
  throw ConfigError(msg);
}

double parse_double(std::string_view key, std::string_view text) {
  text = trim(text);
  const std::string l = lower(text);
  if (l == "inf" || l == "infinity") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || std::isnan(v)) bad_value(key, text);
  return v;
}

long long parse_int(std::string_view key, std::string_view text) {
  text = trim(text);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) bad_value(key, text);
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  const std::string l = lower(trim(text));
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  bad_value(key, text);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string format(double v) {
  if (v == std::numeric_limits<double>::infinity()) return "inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Builder {
  ExperimentConfig cfg;
  std::optional<Calculus> calculus;

  void set(const std::string& key, std::string_view value) {
    const std::string_view v = trim(value);
    if (key == "r") {
      cfg.r = parse_double(key, v);
    } else if (key == "cutoff") {
      cfg.cutoff = static_cast<int>(parse_int(key, v));
    } else if (key == "trajectories") {
      const long long n = parse_int(key, v);
      if (n <= 0) bad_value(key, v, "must be > 0");
      cfg.trajectories = static_cast<std::size_t>(n);
    } else if (key == "batches") {
      cfg.batches = static_cast<int>(parse_int(key, v));
    } else if (key == "workers") {
      cfg.workers = static_cast<int>(parse_int(key, v));
    } else if (key == "seed") {
      std::uint64_t s = 0;
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
      if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
      cfg.seed = s;
    } else if (key == "dt") {
      cfg.dt = parse_double(key, v);
    } else if (key == "tau_max") {
      cfg.tau_max = parse_double(key, v);
    } else if (key == "current") {
      try {
        cfg.current = parse_current_model(lower(v));
      } catch (const std::invalid_argument&) {
        bad_value(key, v, "expected strat, ito or ito_delayed");
      }
    } else if (key == "calculus") {
      const std::string l = lower(v);
      if (l == "ito") {
        calculus = Calculus::Ito;
      } else if (l == "stratonovich" || l == "strat") {
        calculus = Calculus::Stratonovich;
      } else {
        bad_value(key, v, "expected ito or stratonovich");
      }
    } else if (key == "midpoint_iters") {
      cfg.midpoint_iters = static_cast<int>(parse_int(key, v));
    } else if (key == "renorm") {
      cfg.renorm = parse_bool(key, v);
    } else if (key == "noise_scale") {
      cfg.noise_scale = parse_double(key, v);
    } else if (key == "kappa") {
      cfg.kappas.clear();
      if (lower(v) != "none" && !v.empty()) {
        for (std::string_view part : split(v, ',')) {
          const double k = parse_double(key, part);
          if (!(k > 0.0)) bad_value(key, v, "kappa must be > 0 or inf");
          cfg.kappas.push_back(k);
        }
      }
    } else if (key == "phase1" || key == "phase2") {
      cfg.phases.resize(2, 0.0);
      try {
        cfg.phases[key == "phase1" ? 0 : 1] = parse_angle(v);
      } catch (const ConfigError&) {
        bad_value(key, v);
      }
    } else if (key == "switch_time") {
      if (lower(v) == "none") {
        cfg.phase_switch.reset();
      } else {
        if (!cfg.phase_switch) cfg.phase_switch = PhaseSwitch{0.5, 0, 0.5 * std::numbers::pi};
        cfg.phase_switch->time = parse_double(key, v);
      }
    } else if (key == "switch_mode") {
      const long long m = parse_int(key, v);
      if (m != 1 && m != 2) bad_value(key, v, "must be 1 or 2");
      if (!cfg.phase_switch) cfg.phase_switch = PhaseSwitch{0.5, 0, 0.5 * std::numbers::pi};
      cfg.phase_switch->mode = static_cast<int>(m - 1);
    } else if (key == "switch_phase") {
      if (!cfg.phase_switch) cfg.phase_switch = PhaseSwitch{0.5, 0, 0.5 * std::numbers::pi};
      try {
        cfg.phase_switch->phase = parse_angle(v);
      } catch (const ConfigError&) {
        bad_value(key, v);
      }
    } else if (key == "bin_width") {
      cfg.bin_width = parse_double(key, v);
    } else if (key == "truncation_bound") {
      cfg.truncation_bound = parse_double(key, v);
    } else if (key == "pump") {
      cfg.pump = parse_double(key, v);
    } else if (key == "nonlinear_g") {
      cfg.nonlinear_g = parse_double(key, v);
    } else if (key == "coupling") {
      RealMatrix c;
      for (std::string_view row : split(v, ';')) {
        std::vector<double> r;
        for (std::string_view e : split(row, ',')) r.push_back(parse_double(key, e));
        c.push_back(std::move(r));
      }
      cfg.coupling = std::move(c);
    } else if (key == "coupling_strength") {
      cfg.coupling_strength = parse_double(key, v);
    } else if (key == "output_interval") {
      cfg.output_interval = parse_double(key, v);
    } else if (key == "estimator") {
      const std::string l = lower(v);
      if (l == "quadrant") {
        cfg.estimator = SignEstimator::Quadrant;
      } else if (l == "mean_sign") {
        cfg.estimator = SignEstimator::MeanSign;
      } else {
        bad_value(key, v, "expected quadrant or mean_sign");
      }
    } else if (key == "inference_bin") {
      cfg.inference_bin = parse_double(key, v);
    } else if (key == "master_substeps") {
      cfg.master_substeps = static_cast<int>(parse_int(key, v));
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  ExperimentConfig finish() {
    if (calculus && *calculus != calculus_for(cfg.current)) {
      throw ConfigError("contradictory settings: current = " + to_string(cfg.current) + " requires " +
                        (calculus_for(cfg.current) == Calculus::Ito ? "ito" : "stratonovich") + " calculus");
    }
    try {
      cfg.validate();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return cfg;
  }
};

}  // namespace

ExperimentConfig default_config(Experiment experiment) {
  const double half_pi = 0.5 * std::numbers::pi;
  ExperimentConfig c;
  c.experiment = experiment;
  c.phases = {half_pi, half_pi};
  switch (experiment) {
    case Experiment::EprUnfiltered:
      break;
    case Experiment::EprFiltered:
      c.dt = 0.001;
      c.trajectories = 4000;
      c.kappas = {10.0, 50.0};
      break;
    case Experiment::PhaseSwitch:
      c.dt = 0.01;
      c.phases = {0.0, half_pi};
      c.phase_switch = PhaseSwitch{0.5, 0, half_pi};
      break;
    case Experiment::Cim:
      c.r = 0.0;
      c.cutoff = 32;
      c.truncation_bound = 1e-3;
      c.dt = 0.003;
      c.tau_max = 3.0;
      c.trajectories = 10000;
      c.kappas = {5.0, 50.0};
      c.phases = {0.0, 0.0};
      break;
    case Experiment::OracleCheck:
      // x detection: under p detection the conditional x moments are
      // deterministic and the ensemble spread is zero.
      c.trajectories = 10000;
      c.phases = {0.0, 0.0};
      break;
  }
  return c;
}

double parse_angle(std::string_view text) {
  std::string s;
  for (char ch : text) {
    if (ch != ' ' && ch != '\t') s += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  const auto pi_pos = s.find("pi");
  if (pi_pos == std::string::npos) return parse_double("angle", s);
  std::string_view head = std::string_view(s).substr(0, pi_pos);
  std::string_view tail = std::string_view(s).substr(pi_pos + 2);
  double factor = 1.0;
  if (!head.empty() && head.back() == '*') head.remove_suffix(1);
  if (head == "-") {
    factor = -1.0;
  } else if (head == "+") {
    factor = 1.0;
  } else if (!head.empty()) {
    factor = parse_double("angle", head);
  }
  double divisor = 1.0;
  if (!tail.empty()) {
    if (tail.front() != '/') throw ConfigError("invalid angle '" + std::string(text) + "'");
    divisor = parse_double("angle", tail.substr(1));
    if (divisor == 0.0) throw ConfigError("invalid angle '" + std::string(text) + "'");
  }
  return factor * std::numbers::pi / divisor;
}

std::vector<Setting> parse_settings(std::string_view text, std::string_view source) {
  std::vector<Setting> out;
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": expected 'key = value'");
      }
      const std::string key = lower(trim(line.substr(0, eq)));
      if (key.empty()) throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": empty key");
      out.emplace_back(key, std::string(trim(line.substr(eq + 1))));
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

ExperimentConfig build_config(Experiment experiment, const std::vector<Setting>& settings) {
  Builder b{default_config(experiment), std::nullopt};
  for (const auto& [k, v] : settings) b.set(k, v);
  return b.finish();
}

ExperimentConfig parse_config(Experiment experiment, const std::optional<std::filesystem::path>& path,
                              const std::vector<Setting>& overrides) {
  std::vector<Setting> settings;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot read config file " + path->string());
    std::stringstream buf;
    buf << in.rdbuf();
    settings = parse_settings(buf.str(), path->string());
  }
  settings.insert(settings.end(), overrides.begin(), overrides.end());
  return build_config(experiment, settings);
}

std::vector<Setting> config_echo(const ExperimentConfig& c) {
  std::vector<Setting> e;
  e.emplace_back("r", format(c.r));
  e.emplace_back("cutoff", std::to_string(c.cutoff));
  e.emplace_back("trajectories", std::to_string(c.trajectories));
  e.emplace_back("batches", std::to_string(c.batches));
  e.emplace_back("workers", std::to_string(c.workers));
  e.emplace_back("seed", std::to_string(c.seed));
  e.emplace_back("dt", format(c.dt));
  e.emplace_back("tau_max", format(c.tau_max));
  e.emplace_back("current", to_string(c.current));
  e.emplace_back("midpoint_iters", std::to_string(c.midpoint_iters));
  e.emplace_back("renorm", c.renorm ? "true" : "false");
  e.emplace_back("noise_scale", format(c.noise_scale));
  std::string k;
  for (double v : c.kappas) k += (k.empty() ? "" : ",") + format(v);
  e.emplace_back("kappa", k.empty() ? "none" : k);
  e.emplace_back("phase1", format(c.phases.at(0)));
  e.emplace_back("phase2", format(c.phases.at(1)));
  if (c.phase_switch) {
    e.emplace_back("switch_time", format(c.phase_switch->time));
    e.emplace_back("switch_mode", std::to_string(c.phase_switch->mode + 1));
    e.emplace_back("switch_phase", format(c.phase_switch->phase));
  } else {
    e.emplace_back("switch_time", "none");
  }
  e.emplace_back("bin_width", format(c.bin_width));
  e.emplace_back("truncation_bound", format(c.truncation_bound));
  e.emplace_back("pump", format(c.pump));
  e.emplace_back("nonlinear_g", format(c.nonlinear_g));
  std::string m;
  for (std::size_t i = 0; i < c.coupling.size(); ++i) {
    if (i) m += ";";
    for (std::size_t j = 0; j < c.coupling[i].size(); ++j) m += (j ? "," : "") + format(c.coupling[i][j]);
  }
  e.emplace_back("coupling", m);
  e.emplace_back("coupling_strength", format(c.coupling_strength));
  e.emplace_back("output_interval", format(c.output_interval));
  e.emplace_back("estimator", c.estimator == SignEstimator::Quadrant ? "quadrant" : "mean_sign");
  e.emplace_back("inference_bin", format(c.inference_bin));
  e.emplace_back("master_substeps", std::to_string(c.master_substeps));
  return e;
}

}  // namespace qtraj
