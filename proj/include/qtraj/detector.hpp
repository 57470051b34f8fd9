#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qtraj/fock.hpp"
#include "qtraj/record.hpp"
#include "qtraj/sde.hpp"

namespace qtraj {

/// Candidate models for the measured wide-band current.
enum class CurrentModel {
  Strat,       // <x~>_S + xi^S at the step midpoint
  ItoSame,     // <x~>_I(tau) + xi^I(tau)
  ItoDelayed,  // <x~>_I(tau) + xi^I(tau - dtau)
};

CurrentModel parse_current_model(std::string_view text);
std::string to_string(CurrentModel model);
Calculus calculus_for(CurrentModel model);

/// Noise arguments are noise rates xi = dw / dt.
std::vector<double> sample_current(CurrentModel model, std::span<const double> expect_x,
                                   std::span<const double> noise_now,
                                   std::optional<std::span<const double>> noise_prev = std::nullopt);

inline constexpr double kUnfiltered = std::numeric_limits<double>::infinity();

/// First-order detector response dJ/dtau = -kappa (J - j). kappa = infinity
/// is the wide-band limit J = j.
struct FilterState {
  std::vector<double> J;
  double kappa = kUnfiltered;

  FilterState() = default;
  FilterState(int modes, double kappa);
  bool unfiltered() const { return kappa == kUnfiltered; }
  /// Exact update with j held constant over the step.
  void advance(std::span<const double> j, double dt);
};

FilterState filter_step(const FilterState& fs, std::span<const double> j, double dt);

/// Piecewise-constant local-oscillator settings on [0, horizon].
class PhaseSchedule {
 public:
  struct Segment {
    double start;
    PhaseVector phases;
  };

  PhaseSchedule() = default;
  PhaseSchedule(PhaseVector initial, double horizon);

  /// Changes the phase of one mode from `time` onward.
  PhaseSchedule& add_switch(double time, int mode, double phase);

  PhaseVector phase_at(double tau) const;
  double horizon() const { return horizon_; }
  const std::vector<Segment>& segments() const { return segments_; }
  std::vector<double> switch_times() const;
  bool empty() const { return segments_.empty(); }

 private:
  std::vector<Segment> segments_;
  double horizon_ = 0.0;
};

struct TimeBin {
  int n = 0;
  double start = 0.0;
  double end = 0.0;
  std::vector<double> J;  // integral of the current over the bin, per mode
};

/// Integrates a current over consecutive bins of width bin_width tiling the
/// record's horizon. filter_index < 0 selects the pseudo-current j, which is
/// piecewise constant per step and integrates exactly as sum j dt; filtered
/// currents are continuous and use the trapezoidal rule from J(0) = 0.
std::vector<TimeBin> time_average(const CurrentRecord& record, double bin_width, int filter_index = -1);

}  // namespace qtraj
