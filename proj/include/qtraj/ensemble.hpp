#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace qtraj {

/// Ensemble means on a common time grid. Observables are stored [obs][t];
/// stderr is the spread of batch means, std(batch means) / sqrt(batches).
struct EnsembleStats {
  std::vector<double> tau;
  std::vector<std::string> names;
  std::vector<std::vector<double>> mean;
  std::vector<std::vector<double>> stderr_;
  int batches = 0;
  std::size_t trajectories = 0;
  std::size_t failed = 0;
  std::vector<std::size_t> batch_counts;
  std::vector<double> batch_means;  // [batch][obs][t]

  int index_of(const std::string& name) const;
  const std::vector<double>& mean_of(const std::string& name) const { return mean[index_of(name)]; }
  const std::vector<double>& stderr_of(const std::string& name) const { return stderr_[index_of(name)]; }
  double batch_mean(int batch, int obs, std::size_t t) const {
    return batch_means[(static_cast<std::size_t>(batch) * names.size() + obs) * tau.size() + t];
  }
};

struct EnsembleOptions {
  std::size_t trajectories = 1000;
  int batches = 100;
  int workers = 1;
  /// Trajectories dropped for non-finite amplitudes beyond this fraction
  /// abort the run.
  double max_failure_fraction = 1e-3;

  void validate() const;
};

/// Fills `values` ([obs][t], zeroed before the call) for one trajectory.
/// Returns false if the trajectory had to be discarded. Exceptions other
/// than a discard abort the whole ensemble.
using TrajectoryFn = std::function<bool(std::size_t trajectory, std::span<double> values)>;
/// Creates the per-worker trajectory function with its own scratch state.
using WorkerFactory = std::function<TrajectoryFn()>;

/// Runs batches over worker threads. Batch b holds trajectories
/// [b n/B, (b+1) n/B); reduction is in batch order, so results do not depend
/// on the worker count.
EnsembleStats run_ensemble(const EnsembleOptions& options, std::vector<double> tau,
                           std::vector<std::string> names, const WorkerFactory& factory);

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

/// Jackknife over batches of a scalar function of the batch-mean vector.
/// `batch_values` is [batch][component]; counts weight the full-sample mean.
Estimate jackknife(const std::vector<std::vector<double>>& batch_values,
                   const std::vector<std::size_t>& counts,
                   const std::function<double(std::span<const double>)>& f);

}  // namespace qtraj
