#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "qtraj/detector.hpp"
#include "qtraj/fock.hpp"
#include "qtraj/hamiltonian.hpp"
#include "qtraj/noise.hpp"
#include "qtraj/record.hpp"
#include "qtraj/sde.hpp"

namespace qtraj {

/// Population in a top Fock level exceeded the truncation bound.
class TruncationError : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

struct TrajectorySpec {
  HamiltonianSpec hamiltonian;
  PhaseSchedule schedule;  // horizon of the run
  CurrentModel model = CurrentModel::Strat;
  StepConfig step;
  std::vector<double> kappas;  // filters applied to the pseudo-current
  double truncation_bound = 1e-6;
  /// Multiplies every Wiener increment; 0 gives the deterministic drift.
  double noise_scale = 1.0;
  bool keep_record = true;

  void validate(int modes) const;
  std::size_t steps() const;
};

/// View of one grid point handed to observers. At n = 0 the current spans
/// are empty.
struct GridPoint {
  std::size_t n = 0;
  double tau = 0.0;
  std::span<const cplx> psi;
  std::span<const double> expect_x;
  std::span<const double> current;
  std::span<const double> filtered;  // kappas.size() x M
};
using TrajectoryObserver = std::function<void(const GridPoint&)>;

/// Reusable single-trajectory driver; one per worker thread.
///
/// Grid: states at tau_n = n dt, n = 0..N. Current sample n >= 1 is
///   strat:        midpoint current of the step tau_{n-1} -> tau_n
///   ito:          <x~>(psi_n) + dw_n / dt   (dw_n drives tau_n -> tau_{n+1})
///   ito_delayed:  <x~>(psi_n) + dw_{n-1} / dt
/// The local-oscillator phase of each step is sampled at its midpoint.
class TrajectoryIntegrator {
 public:
  TrajectoryIntegrator(const FockSpace& space, TrajectorySpec spec);

  CurrentRecord run(const StateVector& initial, const NoiseStream& noise,
                    const TrajectoryObserver& observer = {});

  const TrajectorySpec& spec() const { return spec_; }
  std::size_t steps() const { return steps_; }
  int noise_channels() const { return channels_; }

 private:
  PhaseVector step_phases(std::size_t n) const;
  void check_truncation(const StateVector& state, std::size_t n, CurrentRecord& rec) const;

  FockSpace space_;
  TrajectorySpec spec_;
  std::size_t steps_;
  Stepper stepper_;
  int channels_;
};

CurrentRecord integrate_trajectory(const StateVector& initial, const TrajectorySpec& spec,
                                   const NoiseStream& noise, const TrajectoryObserver& observer = {});

}  // namespace qtraj
