#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qtraj {

using cplx = std::complex<double>;

/// Raised for malformed arguments to the Fock-space layer (bad mode index,
/// unnormalized state where a normalized one is required, bad operator text).
class FockError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Truncated multimode number basis. The flat index is row-major over the
/// occupation tuple with the last mode contiguous.
class FockSpace {
 public:
  explicit FockSpace(std::vector<int> cutoffs);
  static FockSpace uniform(int modes, int cutoff);

  int modes() const { return static_cast<int>(cutoffs_.size()); }
  int cutoff(int k) const { return cutoffs_.at(k); }
  const std::vector<int>& cutoffs() const { return cutoffs_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t stride(int k) const { return strides_[k]; }

  std::vector<int> occupation(std::size_t index) const;
  std::size_t index(std::span<const int> occupation) const;
  int level(std::size_t index, int k) const {
    return static_cast<int>((index / strides_[k]) % (cutoffs_[k] + 1));
  }

  void check_mode(int k) const;

  bool operator==(const FockSpace& other) const { return cutoffs_ == other.cutoffs_; }

 private:
  std::vector<int> cutoffs_;
  std::vector<std::size_t> strides_;
  std::size_t dimension_ = 1;
};

// Matrix-free ladder kernels. `out` must not alias `in`; with `Accumulate`
// the result is added to `out` scaled by `scale`.

void apply_annihilate(const FockSpace& space, int k, std::span<const cplx> in,
                      std::span<cplx> out);
/// Returns the probability carried by the top level of mode k, which the
/// truncated creation operator discards.
double apply_create(const FockSpace& space, int k, std::span<const cplx> in,
                    std::span<cplx> out);
void apply_number(const FockSpace& space, int k, std::span<const cplx> in,
                  std::span<cplx> out);

cplx inner(std::span<const cplx> bra, std::span<const cplx> ket);
double norm_squared(std::span<const cplx> v);

class StateVector {
 public:
  explicit StateVector(FockSpace space);
  StateVector(FockSpace space, std::vector<cplx> amplitudes);

  /// Number state |n_1, ..., n_M>.
  static StateVector basis(FockSpace space, std::span<const int> occupation);
  static StateVector vacuum(FockSpace space);

  const FockSpace& space() const { return space_; }
  std::size_t size() const { return amplitudes_.size(); }
  std::span<const cplx> amplitudes() const { return amplitudes_; }
  std::span<cplx> amplitudes() { return amplitudes_; }
  cplx operator[](std::size_t i) const { return amplitudes_[i]; }
  cplx& operator[](std::size_t i) { return amplitudes_[i]; }

  double norm_squared() const;
  /// Rescales to unit norm and returns the norm before rescaling.
  double normalize();
  /// Population in the top occupation level of mode k.
  double tail_population(int k) const;
  double max_tail_population() const;

 private:
  FockSpace space_;
  std::vector<cplx> amplitudes_;
};

/// Local-oscillator phases, one per mode, in radians.
struct PhaseVector {
  std::vector<double> phases;

  PhaseVector() = default;
  explicit PhaseVector(std::vector<double> p) : phases(std::move(p)) {}
  static PhaseVector zeros(int modes) { return PhaseVector(std::vector<double>(modes, 0.0)); }

  std::size_t size() const { return phases.size(); }
  double operator[](std::size_t k) const { return phases[k]; }
  /// Copy with every angle reduced to [0, 2pi).
  PhaseVector reduced() const;
  bool same_angles(const PhaseVector& other, double tol = 1e-12) const;
};

StateVector annihilate(const StateVector& state, int k);

struct CreateResult {
  StateVector state;
  double dropped_probability;
};
CreateResult create(const StateVector& state, int k);

/// <psi| a_k e^{-i phi} + a_k^dag e^{i phi} |psi>; requires a normalized state.
double quadrature_expect(const StateVector& state, int k, double phi);

/// Product of single-mode operators applied right to left, e.g. "x1 x2",
/// "p1*p2", "n1", "x1^2", "a2 ad1". Modes are 1-based in the text form.
class OperatorProduct {
 public:
  enum class Kind { Annihilate, Create, Number, X, P };
  struct Factor {
    Kind kind;
    int mode;  // 0-based
  };

  OperatorProduct() = default;
  explicit OperatorProduct(std::vector<Factor> factors) : factors_(std::move(factors)) {}
  static OperatorProduct parse(std::string_view text);

  const std::vector<Factor>& factors() const { return factors_; }
  std::string to_string() const;

  /// O|psi>, applying the rightmost factor first.
  StateVector apply(const StateVector& state) const;

 private:
  std::vector<Factor> factors_;
};

cplx pair_expect(const StateVector& state, const OperatorProduct& op);
cplx pair_expect(const StateVector& state, std::string_view op_text);

}  // namespace qtraj
