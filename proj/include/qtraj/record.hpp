#pragma once

#include <cstddef>
#include <vector>

namespace qtraj {

/// Per-trajectory time series. Conditional means are stored on the full grid
/// tau_0..tau_N; current sample i belongs to the step ending at tau_{i+1}.
struct CurrentRecord {
  int modes = 0;
  double dt = 0.0;
  std::vector<double> tau;
  std::vector<double> expect_x;               // (N+1) x M
  std::vector<double> current;                // N x M pseudo-current j
  std::vector<double> kappas;                 // filter bandwidths
  std::vector<std::vector<double>> filtered;  // per bandwidth: N x M

  double max_tail_population = 0.0;
  double max_norm_deviation = 0.0;
  double dropped_probability = 0.0;
  std::size_t nonconverged_steps = 0;

  std::size_t steps() const { return tau.empty() ? 0 : tau.size() - 1; }
  double expect_at(std::size_t n, int k) const { return expect_x[n * modes + k]; }
  double current_at(std::size_t i, int k) const { return current[i * modes + k]; }
  double filtered_at(std::size_t f, std::size_t i, int k) const { return filtered[f][i * modes + k]; }
};

}  // namespace qtraj
