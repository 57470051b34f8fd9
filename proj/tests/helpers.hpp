#pragma once

#include <cmath>
#include <random>

#include "qtraj/fock.hpp"

namespace testing {

// Random normalized state whose amplitudes fall off geometrically with the
// total occupation, so the top levels carry negligible weight.
inline qtraj::StateVector random_state(const qtraj::FockSpace& space, std::mt19937_64& rng, double decay = 0.25) {
  std::normal_distribution<double> g;
  qtraj::StateVector s(space);
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    int total = 0;
    for (int k = 0; k < space.modes(); ++k) total += space.level(i, k);
    const double scale = std::pow(decay, total);
    s[i] = {scale * g(rng), scale * g(rng)};
  }
  s.normalize();
  return s;
}

}  // namespace testing
