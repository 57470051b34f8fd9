#include "qtraj/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qtraj {

namespace {

SseDrift drift_for(const TrajectorySpec& spec) {
  SseDrift d;
  d.hamiltonian = spec.hamiltonian;
  d.phases = spec.schedule.phase_at(0.0);
  d.calculus = calculus_for(spec.model);
  return d;
}

}  // namespace

void TrajectorySpec::validate(int modes) const {
  step.validate();
  hamiltonian.validate(modes);
  if (schedule.empty()) throw std::invalid_argument("trajectory needs a phase schedule");
  if (static_cast<int>(schedule.segments().front().phases.size()) != modes) {
    throw std::invalid_argument("phase vector size does not match the number of modes");
  }
  if (!(schedule.horizon() >= 0.0)) throw std::invalid_argument("trajectory horizon must be >= 0");
  const double ratio = schedule.horizon() / step.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(ratio, 1.0)) {
    throw std::invalid_argument("horizon is not a multiple of dt");
  }
  for (double k : kappas) {
    if (!(k > 0.0)) throw std::invalid_argument("detection bandwidth kappa must be > 0");
  }
  if (!(truncation_bound > 0.0)) throw std::invalid_argument("truncation bound must be > 0");
  if (!(noise_scale >= 0.0)) throw std::invalid_argument("noise scale must be >= 0");
}

std::size_t TrajectorySpec::steps() const {
  return static_cast<std::size_t>(std::llround(schedule.horizon() / step.dt));
}

TrajectoryIntegrator::TrajectoryIntegrator(const FockSpace& space, TrajectorySpec spec)
    : space_(space),
      spec_((spec.validate(space.modes()), std::move(spec))),
      steps_(spec_.steps()),
      stepper_(space_, drift_for(spec_), spec_.step),
      channels_(stepper_.kernel().noise_channels()) {}

PhaseVector TrajectoryIntegrator::step_phases(std::size_t n) const {
  const double t = std::min((static_cast<double>(n) + 0.5) * spec_.step.dt, spec_.schedule.horizon());
  return spec_.schedule.phase_at(t);
}

void TrajectoryIntegrator::check_truncation(const StateVector& state, std::size_t n,
                                            CurrentRecord& rec) const {
  const double tail = state.max_tail_population();
  rec.max_tail_population = std::max(rec.max_tail_population, tail);
  if (tail > spec_.truncation_bound) {
    std::ostringstream msg;
    msg << "top Fock level population " << tail << " exceeds the truncation bound "
        << spec_.truncation_bound << " at tau = " << static_cast<double>(n) * spec_.step.dt
        << "; increase the cutoff";
    throw TruncationError(msg.str());
  }
}

CurrentRecord TrajectoryIntegrator::run(const StateVector& initial, const NoiseStream& noise,
                                        const TrajectoryObserver& observer) {
  if (!(initial.space() == space_)) throw std::invalid_argument("initial state is in a different Fock space");
  if (noise.channels() != noise_channels()) throw std::invalid_argument("noise stream channel count does not match the SSE");

  const int m = space_.modes();
  const double dt = spec_.step.dt;
  const std::size_t nf = spec_.kappas.size();
  const CurrentModel model = spec_.model;
  SseKernel& kernel = stepper_.kernel();

  CurrentRecord rec;
  rec.modes = m;
  rec.dt = dt;
  rec.kappas = spec_.kappas;
  if (spec_.keep_record) {
    rec.tau.resize(steps_ + 1);
    for (std::size_t n = 0; n <= steps_; ++n) rec.tau[n] = static_cast<double>(n) * dt;
    rec.expect_x.reserve((steps_ + 1) * m);
    rec.current.reserve(steps_ * m);
    rec.filtered.assign(nf, {});
    for (auto& f : rec.filtered) f.reserve(steps_ * m);
  }

  StateVector state = initial;
  std::vector<FilterState> filters;
  for (double k : spec_.kappas) filters.emplace_back(m, k);

  const int channels = noise_channels();
  std::vector<double> dw(channels), dw_next(channels), x(m), j(m), filt(nf * m, 0.0);

  auto draw = [&](std::size_t step, std::vector<double>& out) {
    noise.increments(static_cast<std::int64_t>(step), dt, out);
    if (spec_.noise_scale != 1.0) {
      for (double& v : out) v *= spec_.noise_scale;
    }
  };

  kernel.set_phases(step_phases(0));
  kernel.expect_x(state.amplitudes(), x);
  check_truncation(state, 0, rec);
  if (spec_.keep_record) rec.expect_x.insert(rec.expect_x.end(), x.begin(), x.end());
  if (observer) observer({0, 0.0, state.amplitudes(), x, {}, filt});

  draw(0, dw);
  for (std::size_t n = 0; n < steps_; ++n) {
    StepDiagnostics diag;
    const std::size_t next = n + 1;
    if (model == CurrentModel::Strat) {
      diag = stepper_.midpoint(state.amplitudes(), dw, j);
      if (next < steps_) kernel.set_phases(step_phases(next));
      kernel.expect_x(state.amplitudes(), x);
    } else {
      diag = stepper_.euler_maruyama(state.amplitudes(), dw);
      draw(next, dw_next);
      if (model == CurrentModel::ItoDelayed) {
        kernel.expect_x(state.amplitudes(), x);
        for (int k = 0; k < m; ++k) j[k] = x[k] + dw[k] / dt;
        kernel.set_phases(step_phases(next));
      } else {
        kernel.set_phases(step_phases(next));
        kernel.expect_x(state.amplitudes(), x);
        for (int k = 0; k < m; ++k) j[k] = x[k] + dw_next[k] / dt;
      }
    }
    if (!diag.converged) ++rec.nonconverged_steps;
    rec.max_norm_deviation = std::max(rec.max_norm_deviation, std::abs(diag.raw_norm - 1.0));
    rec.dropped_probability = std::max(rec.dropped_probability, diag.dropped);
    check_truncation(state, next, rec);

    for (std::size_t f = 0; f < nf; ++f) {
      filters[f].advance(j, dt);
      std::copy(filters[f].J.begin(), filters[f].J.end(), filt.begin() + f * m);
    }
    if (spec_.keep_record) {
      rec.expect_x.insert(rec.expect_x.end(), x.begin(), x.end());
      rec.current.insert(rec.current.end(), j.begin(), j.end());
      for (std::size_t f = 0; f < nf; ++f) {
        rec.filtered[f].insert(rec.filtered[f].end(), filters[f].J.begin(), filters[f].J.end());
      }
    }
    if (observer) observer({next, static_cast<double>(next) * dt, state.amplitudes(), x, j, filt});

    if (model == CurrentModel::Strat) {
      if (next < steps_) draw(next, dw);
    } else {
      std::swap(dw, dw_next);
    }
  }
  return rec;
}

CurrentRecord integrate_trajectory(const StateVector& initial, const TrajectorySpec& spec,
                                   const NoiseStream& noise, const TrajectoryObserver& observer) {
  TrajectoryIntegrator integrator(initial.space(), spec);
  return integrator.run(initial, noise, observer);
}

}  // namespace qtraj
