#include "qtraj/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qtraj {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

NoiseStream::NoiseStream(std::uint64_t master_seed, std::uint64_t trajectory_index, int channels)
    : master_seed_(master_seed),
      trajectory_index_(trajectory_index),
      key_(mix64(mix64(master_seed) ^ (trajectory_index * 0xD1B54A32D192ED03ULL))),
      channels_(channels) {
  if (channels < 0 || channels >= (1 << 19)) throw std::invalid_argument("NoiseStream: bad channel count");
}

namespace {

double to_unit_open(std::uint64_t h) {
  // 53 random bits, offset by half an ulp so the result lies in (0, 1).
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

double NoiseStream::gaussian(std::int64_t step, int channel) const {
  if (channel < 0 || channel >= channels_) throw std::out_of_range("NoiseStream: channel out of range");
  const std::uint64_t pair = static_cast<std::uint64_t>(channel) >> 1;
  const std::uint64_t counter = (static_cast<std::uint64_t>(step + 1) << 20) | (pair << 1);
  const double u1 = to_unit_open(mix64(key_ ^ mix64(counter)));
  const double u2 = to_unit_open(mix64(key_ ^ mix64(counter | 1ULL)));
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return (channel & 1) ? radius * std::sin(angle) : radius * std::cos(angle);
}

void NoiseStream::increments(std::int64_t step, double dt, std::span<double> out) const {
  if (static_cast<int>(out.size()) != channels_) throw std::invalid_argument("NoiseStream: output size mismatch");
  const double s = std::sqrt(dt);
  for (int c = 0; c < channels_; ++c) out[c] = s * gaussian(step, c);
}

}  // namespace qtraj
