#include "qtraj/detector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qtraj {

CurrentModel parse_current_model(std::string_view text) {
  if (text == "strat" || text == "stratonovich") return CurrentModel::Strat;
  if (text == "ito" || text == "ito_same") return CurrentModel::ItoSame;
  if (text == "ito_delayed" || text == "delayed") return CurrentModel::ItoDelayed;
  throw std::invalid_argument("unknown current model '" + std::string(text) + "'");
}

std::string to_string(CurrentModel model) {
  switch (model) {
    case CurrentModel::Strat: return "strat";
    case CurrentModel::ItoSame: return "ito";
    case CurrentModel::ItoDelayed: return "ito_delayed";
  }
  return "?";
}

Calculus calculus_for(CurrentModel model) {
  return model == CurrentModel::Strat ? Calculus::Stratonovich : Calculus::Ito;
}

std::vector<double> sample_current(CurrentModel model, std::span<const double> expect_x,
                                   std::span<const double> noise_now,
                                   std::optional<std::span<const double>> noise_prev) {
  std::span<const double> noise = noise_now;
  if (model == CurrentModel::ItoDelayed) {
    if (!noise_prev) throw std::invalid_argument("delayed current model needs the previous step's noise");
    noise = *noise_prev;
  }
  if (noise.size() < expect_x.size()) throw std::invalid_argument("sample_current: noise size mismatch");
  std::vector<double> j(expect_x.size());
  for (std::size_t k = 0; k < j.size(); ++k) j[k] = expect_x[k] + noise[k];
  return j;
}

FilterState::FilterState(int modes, double kappa_) : J(modes, 0.0), kappa(kappa_) {
  if (!(kappa > 0.0)) throw std::invalid_argument("detection bandwidth kappa must be > 0");
}

void FilterState::advance(std::span<const double> j, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("filter step needs dt > 0");
  if (unfiltered()) {
    std::copy(j.begin(), j.end(), J.begin());
    return;
  }
  const double decay = std::exp(-kappa * dt);
  for (std::size_t k = 0; k < J.size(); ++k) J[k] = decay * J[k] + (1.0 - decay) * j[k];
}

FilterState filter_step(const FilterState& fs, std::span<const double> j, double dt) {
  FilterState out = fs;
  out.advance(j, dt);
  return out;
}

PhaseSchedule::PhaseSchedule(PhaseVector initial, double horizon) : horizon_(horizon) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("phase schedule horizon must be >= 0");
  segments_.push_back({0.0, std::move(initial)});
}

PhaseSchedule& PhaseSchedule::add_switch(double time, int mode, double phase) {
  if (segments_.empty()) throw std::logic_error("phase schedule has no initial phases");
  if (time < 0.0 || time > horizon_) throw std::invalid_argument("switch time outside the schedule horizon");
  if (mode < 0 || mode >= static_cast<int>(segments_.front().phases.size())) {
    throw std::invalid_argument("switch mode out of range");
  }
  // Insert keeping segments sorted; later segments inherit the change.
  auto it = std::find_if(segments_.begin(), segments_.end(),
                         [&](const Segment& s) { return s.start >= time; });
  if (it != segments_.end() && it->start == time) {
    for (auto j = it; j != segments_.end(); ++j) j->phases.phases[mode] = phase;
  } else {
    PhaseVector p = std::prev(it)->phases;
    it = segments_.insert(it, {time, std::move(p)});
    for (auto j = it; j != segments_.end(); ++j) j->phases.phases[mode] = phase;
  }
  return *this;
}

PhaseVector PhaseSchedule::phase_at(double tau) const {
  if (segments_.empty()) throw std::logic_error("empty phase schedule");
  if (tau < 0.0 || tau > horizon_ * (1.0 + 1e-12)) {
    throw std::out_of_range("phase_at: tau outside [0, horizon]");
  }
  const Segment* active = &segments_.front();
  for (const Segment& s : segments_) {
    if (s.start <= tau) active = &s;
  }
  return active->phases;
}

std::vector<double> PhaseSchedule::switch_times() const {
  std::vector<double> t;
  for (std::size_t i = 1; i < segments_.size(); ++i) t.push_back(segments_[i].start);
  return t;
}

std::vector<TimeBin> time_average(const CurrentRecord& record, double bin_width, int filter_index) {
  const std::size_t steps = record.steps();
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be > 0");
  const double ratio = bin_width / record.dt;
  const auto per_bin = static_cast<std::size_t>(std::llround(ratio));
  if (per_bin == 0 || std::abs(ratio - static_cast<double>(per_bin)) > 1e-9 * ratio) {
    throw std::invalid_argument("bin width is not a multiple of the step size");
  }
  if (steps % per_bin != 0) throw std::invalid_argument("bins do not tile the record horizon");
  if (filter_index >= static_cast<int>(record.filtered.size())) {
    throw std::out_of_range("filter index out of range");
  }

  const int m = record.modes;
  const bool piecewise = filter_index < 0 || record.kappas[filter_index] == kUnfiltered;
  const std::vector<double>& series = filter_index < 0 ? record.current : record.filtered[filter_index];

  std::vector<TimeBin> bins(steps / per_bin);
  for (std::size_t b = 0; b < bins.size(); ++b) {
    TimeBin& bin = bins[b];
    bin.n = static_cast<int>(b);
    bin.start = record.tau[b * per_bin];
    bin.end = record.tau[(b + 1) * per_bin];
    bin.J.assign(m, 0.0);
    for (std::size_t s = b * per_bin; s < (b + 1) * per_bin; ++s) {
      for (int k = 0; k < m; ++k) {
        const double right = series[s * m + k];
        if (piecewise) {
          bin.J[k] += record.dt * right;
        } else {
          const double left = s == 0 ? 0.0 : series[(s - 1) * m + k];
          bin.J[k] += 0.5 * record.dt * (left + right);
        }
      }
    }
  }
  return bins;
}

}  // namespace qtraj
