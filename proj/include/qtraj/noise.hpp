#pragma once

#include <cstdint>
#include <span>

namespace qtraj {

/// Reproducible Gaussian increments for one trajectory.
///
/// Every value is a pure function of (master_seed, trajectory_index, step,
/// channel): a SplitMix64 hash of the counter feeds a Box-Muller transform.
/// Draws can be taken in any order and from any thread. Step -1 is a valid
/// counter and is used for draws that precede the first integration step.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t master_seed, std::uint64_t trajectory_index, int channels);

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t trajectory_index() const { return trajectory_index_; }
  int channels() const { return channels_; }

  /// Standard normal deviate.
  double gaussian(std::int64_t step, int channel) const;
  /// Wiener increments with variance dt for every channel of `step`.
  void increments(std::int64_t step, double dt, std::span<double> out) const;

 private:
  std::uint64_t master_seed_;
  std::uint64_t trajectory_index_;
  std::uint64_t key_;
  int channels_;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace qtraj
