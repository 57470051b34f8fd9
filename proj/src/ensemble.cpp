#include "qtraj/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "qtraj/sde.hpp"

namespace qtraj {

int EnsembleStats::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  throw std::out_of_range("no observable named '" + name + "'");
}

void EnsembleOptions::validate() const {
  if (trajectories == 0) throw std::invalid_argument("ensemble needs at least one trajectory");
  if (batches < 2) throw std::invalid_argument("ensemble needs at least two batches");
  if (trajectories % static_cast<std::size_t>(batches) != 0) {
    throw std::invalid_argument("trajectory count must be a multiple of the batch count");
  }
  if (workers < 1) throw std::invalid_argument("worker count must be >= 1");
}

EnsembleStats run_ensemble(const EnsembleOptions& options, std::vector<double> tau,
                           std::vector<std::string> names, const WorkerFactory& factory) {
  options.validate();
  const std::size_t nt = tau.size(), no = names.size(), width = nt * no;
  const int nb = options.batches;
  const std::size_t per_batch = options.trajectories / nb;

  std::vector<double> sums(nb * width, 0.0);
  std::vector<std::size_t> counts(nb, 0), failures(nb, 0);
  std::atomic<int> next_batch{0};
  std::atomic<bool> abort{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto work = [&] {
    try {
      TrajectoryFn fn = factory();
      std::vector<double> values(width);
      for (int b = next_batch++; b < nb && !abort; b = next_batch++) {
        double* acc = sums.data() + b * width;
        for (std::size_t t = b * per_batch; t < (b + 1) * per_batch; ++t) {
          std::fill(values.begin(), values.end(), 0.0);
          if (!fn(t, values)) {
            ++failures[b];
            continue;
          }
          for (std::size_t i = 0; i < width; ++i) acc[i] += values[i];
          ++counts[b];
        }
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      abort = true;
    }
  };

  const int nw = std::min(options.workers, nb);
  if (nw == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  EnsembleStats s;
  s.tau = std::move(tau);
  s.names = std::move(names);
  s.batches = nb;
  s.batch_counts = counts;
  for (int b = 0; b < nb; ++b) {
    s.trajectories += counts[b];
    s.failed += failures[b];
  }
  if (static_cast<double>(s.failed) > options.max_failure_fraction * static_cast<double>(options.trajectories)) {
    throw IntegrationError(std::to_string(s.failed) + " of " + std::to_string(options.trajectories) +
                           " trajectories produced non-finite amplitudes");
  }
  for (int b = 0; b < nb; ++b) {
    if (counts[b] == 0) throw IntegrationError("a batch lost every trajectory");
  }

  s.batch_means.assign(nb * width, 0.0);
  for (int b = 0; b < nb; ++b) {
    for (std::size_t i = 0; i < width; ++i) s.batch_means[b * width + i] = sums[b * width + i] / counts[b];
  }
  s.mean.assign(no, std::vector<double>(nt, 0.0));
  s.stderr_.assign(no, std::vector<double>(nt, 0.0));
  for (std::size_t o = 0; o < no; ++o) {
    for (std::size_t t = 0; t < nt; ++t) {
      double total = 0.0;
      for (int b = 0; b < nb; ++b) total += sums[b * width + o * nt + t];
      s.mean[o][t] = total / static_cast<double>(s.trajectories);
      double bm = 0.0;
      for (int b = 0; b < nb; ++b) bm += s.batch_means[b * width + o * nt + t];
      bm /= nb;
      double var = 0.0;
      for (int b = 0; b < nb; ++b) {
        const double d = s.batch_means[b * width + o * nt + t] - bm;
        var += d * d;
      }
      var /= (nb - 1);
      s.stderr_[o][t] = std::sqrt(var / nb);
    }
  }
  return s;
}

Estimate jackknife(const std::vector<std::vector<double>>& batch_values,
                   const std::vector<std::size_t>& counts,
                   const std::function<double(std::span<const double>)>& f) {
  const std::size_t nb = batch_values.size();
  if (nb < 2 || counts.size() != nb) throw std::invalid_argument("jackknife needs >= 2 batches");
  const std::size_t dim = batch_values.front().size();
  std::vector<double> total(dim, 0.0);
  double n = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t i = 0; i < dim; ++i) total[i] += counts[b] * batch_values[b][i];
    n += static_cast<double>(counts[b]);
  }
  std::vector<double> full(dim), leave(dim);
  for (std::size_t i = 0; i < dim; ++i) full[i] = total[i] / n;
  Estimate est;
  est.value = f(full);
  std::vector<double> loo(nb);
  double mean = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    const double nl = n - static_cast<double>(counts[b]);
    for (std::size_t i = 0; i < dim; ++i) leave[i] = (total[i] - counts[b] * batch_values[b][i]) / nl;
    loo[b] = f(leave);
    mean += loo[b];
  }
  mean /= static_cast<double>(nb);
  double var = 0.0;
  for (double v : loo) var += (v - mean) * (v - mean);
  est.stderr_ = std::sqrt(var * static_cast<double>(nb - 1) / static_cast<double>(nb));
  return est;
}

}  // namespace qtraj
