#include "qtraj/fock.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace qtraj {

FockSpace::FockSpace(std::vector<int> cutoffs) : cutoffs_(std::move(cutoffs)) {
  if (cutoffs_.empty()) throw FockError("FockSpace needs at least one mode");
  for (int c : cutoffs_) {
    if (c < 1) throw FockError("photon cutoff must be >= 1");
  }
  strides_.assign(cutoffs_.size(), 1);
  for (int k = static_cast<int>(cutoffs_.size()) - 1; k >= 0; --k) {
    strides_[k] = dimension_;
    dimension_ *= static_cast<std::size_t>(cutoffs_[k] + 1);
  }
}

FockSpace FockSpace::uniform(int modes, int cutoff) {
  if (modes < 1) throw FockError("number of modes must be positive");
  return FockSpace(std::vector<int>(modes, cutoff));
}

std::vector<int> FockSpace::occupation(std::size_t index) const {
  if (index >= dimension_) throw FockError("flat index out of range");
  std::vector<int> occ(cutoffs_.size());
  for (int k = 0; k < modes(); ++k) occ[k] = level(index, k);
  return occ;
}

std::size_t FockSpace::index(std::span<const int> occupation) const {
  if (static_cast<int>(occupation.size()) != modes()) {
    throw FockError("occupation tuple has wrong length");
  }
  std::size_t idx = 0;
  for (int k = 0; k < modes(); ++k) {
    if (occupation[k] < 0 || occupation[k] > cutoffs_[k]) {
      throw FockError("occupation exceeds cutoff");
    }
    idx += static_cast<std::size_t>(occupation[k]) * strides_[k];
  }
  return idx;
}

void FockSpace::check_mode(int k) const {
  if (k < 0 || k >= modes()) {
    throw FockError("mode index " + std::to_string(k) + " out of range for " +
                    std::to_string(modes()) + " modes");
  }
}

namespace {

// Visits every (block, level) run of mode k: `f(n, offset, run_length)`.
template <class F>
void for_each_level(const FockSpace& space, int k, F&& f) {
  const std::size_t s = space.stride(k);
  const int top = space.cutoff(k);
  const std::size_t block = s * static_cast<std::size_t>(top + 1);
  for (std::size_t base = 0; base < space.dimension(); base += block) {
    for (int n = 0; n <= top; ++n) f(n, base + static_cast<std::size_t>(n) * s, s);
  }
}

void check_sizes(const FockSpace& space, std::size_t a, std::size_t b) {
  if (a != space.dimension() || b != space.dimension()) {
    throw FockError("vector length does not match Fock-space dimension");
  }
}

}  // namespace

void apply_annihilate(const FockSpace& space, int k, std::span<const cplx> in,
                      std::span<cplx> out) {
  space.check_mode(k);
  check_sizes(space, in.size(), out.size());
  const int top = space.cutoff(k);
  const std::size_t s = space.stride(k);
  for_each_level(space, k, [&](int n, std::size_t off, std::size_t len) {
    if (n == top) {
      for (std::size_t i = 0; i < len; ++i) out[off + i] = 0.0;
      return;
    }
    const double c = std::sqrt(static_cast<double>(n + 1));
    for (std::size_t i = 0; i < len; ++i) out[off + i] = c * in[off + s + i];
  });
}

double apply_create(const FockSpace& space, int k, std::span<const cplx> in,
                    std::span<cplx> out) {
  space.check_mode(k);
  check_sizes(space, in.size(), out.size());
  const int top = space.cutoff(k);
  const std::size_t s = space.stride(k);
  double dropped = 0.0;
  for_each_level(space, k, [&](int n, std::size_t off, std::size_t len) {
    if (n == top) {
      for (std::size_t i = 0; i < len; ++i) dropped += std::norm(in[off + i]);
    }
    if (n == 0) {
      for (std::size_t i = 0; i < len; ++i) out[off + i] = 0.0;
      return;
    }
    const double c = std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < len; ++i) out[off + i] = c * in[off - s + i];
  });
  return dropped;
}

void apply_number(const FockSpace& space, int k, std::span<const cplx> in,
                  std::span<cplx> out) {
  space.check_mode(k);
  check_sizes(space, in.size(), out.size());
  for_each_level(space, k, [&](int n, std::size_t off, std::size_t len) {
    const double c = static_cast<double>(n);
    for (std::size_t i = 0; i < len; ++i) out[off + i] = c * in[off + i];
  });
}

cplx inner(std::span<const cplx> bra, std::span<const cplx> ket) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < bra.size(); ++i) {
    const double ar = bra[i].real(), ai = bra[i].imag();
    const double br = ket[i].real(), bi = ket[i].imag();
    re += ar * br + ai * bi;
    im += ar * bi - ai * br;
  }
  return {re, im};
}

double norm_squared(std::span<const cplx> v) {
  double s = 0.0;
  for (const cplx& z : v) s += z.real() * z.real() + z.imag() * z.imag();
  return s;
}

StateVector::StateVector(FockSpace space)
    : space_(std::move(space)), amplitudes_(space_.dimension(), cplx{0.0, 0.0}) {}

StateVector::StateVector(FockSpace space, std::vector<cplx> amplitudes)
    : space_(std::move(space)), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() != space_.dimension()) {
    throw FockError("amplitude array length does not match Fock-space dimension");
  }
}

StateVector StateVector::basis(FockSpace space, std::span<const int> occupation) {
  StateVector s(std::move(space));
  s.amplitudes_[s.space_.index(occupation)] = 1.0;
  return s;
}

StateVector StateVector::vacuum(FockSpace space) {
  StateVector s(std::move(space));
  s.amplitudes_[0] = 1.0;
  return s;
}

double StateVector::norm_squared() const { return qtraj::norm_squared(amplitudes_); }

double StateVector::normalize() {
  const double n = std::sqrt(norm_squared());
  if (!(n > 0.0) || !std::isfinite(n)) throw FockError("cannot normalize a zero or non-finite state");
  const double inv = 1.0 / n;
  for (cplx& z : amplitudes_) z *= inv;
  return n;
}

double StateVector::tail_population(int k) const {
  space_.check_mode(k);
  double p = 0.0;
  const int top = space_.cutoff(k);
  for_each_level(space_, k, [&](int n, std::size_t off, std::size_t len) {
    if (n != top) return;
    for (std::size_t i = 0; i < len; ++i) p += std::norm(amplitudes_[off + i]);
  });
  return p / norm_squared();
}

double StateVector::max_tail_population() const {
  double m = 0.0;
  for (int k = 0; k < space_.modes(); ++k) m = std::max(m, tail_population(k));
  return m;
}

PhaseVector PhaseVector::reduced() const {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  PhaseVector out = *this;
  for (double& p : out.phases) {
    p = std::fmod(p, two_pi);
    if (p < 0.0) p += two_pi;
    if (p >= two_pi) p = 0.0;
  }
  return out;
}

bool PhaseVector::same_angles(const PhaseVector& other, double tol) const {
  if (size() != other.size()) return false;
  const PhaseVector a = reduced(), b = other.reduced();
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t k = 0; k < size(); ++k) {
    const double d = std::abs(a[k] - b[k]);
    if (std::min(d, two_pi - d) > tol) return false;
  }
  return true;
}

StateVector annihilate(const StateVector& state, int k) {
  StateVector out(state.space());
  apply_annihilate(state.space(), k, state.amplitudes(), out.amplitudes());
  return out;
}

CreateResult create(const StateVector& state, int k) {
  StateVector out(state.space());
  const double dropped = apply_create(state.space(), k, state.amplitudes(), out.amplitudes());
  return {std::move(out), dropped};
}

namespace {

void require_normalized(const StateVector& state) {
  if (std::abs(state.norm_squared() - 1.0) > 1e-6) {
    throw FockError("state is not normalized (|norm^2 - 1| > 1e-6)");
  }
}

}  // namespace

double quadrature_expect(const StateVector& state, int k, double phi) {
  state.space().check_mode(k);
  require_normalized(state);
  StateVector low = annihilate(state, k);
  StateVector high = create(state, k).state;
  const cplx rot = std::polar(1.0, -phi);
  const cplx v = rot * inner(state.amplitudes(), low.amplitudes()) +
                 std::conj(rot) * inner(state.amplitudes(), high.amplitudes());
  return v.real();
}

OperatorProduct OperatorProduct::parse(std::string_view text) {
  std::vector<Factor> factors;
  std::size_t i = 0;
  auto fail = [&](const std::string& why) -> OperatorProduct {
    throw FockError("malformed operator product '" + std::string(text) + "': " + why);
  };
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == '*') {
      ++i;
      continue;
    }
    Kind kind;
    if (text.substr(i, 2) == "ad") {
      kind = Kind::Create;
      i += 2;
    } else if (c == 'a') {
      kind = Kind::Annihilate;
      ++i;
    } else if (c == 'n') {
      kind = Kind::Number;
      ++i;
    } else if (c == 'x') {
      kind = Kind::X;
      ++i;
    } else if (c == 'p') {
      kind = Kind::P;
      ++i;
    } else {
      return fail(std::string("unknown operator '") + c + "'");
    }
    int mode = 0;
    auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), mode);
    if (ec != std::errc() || mode < 1) return fail("expected a 1-based mode index");
    i = static_cast<std::size_t>(ptr - text.data());
    int power = 1;
    if (i < text.size() && text[i] == '^') {
      ++i;
      auto [p2, ec2] = std::from_chars(text.data() + i, text.data() + text.size(), power);
      if (ec2 != std::errc() || power < 1) return fail("expected a positive power");
      i = static_cast<std::size_t>(p2 - text.data());
    }
    for (int p = 0; p < power; ++p) factors.push_back({kind, mode - 1});
  }
  if (factors.empty()) return fail("empty product");
  return OperatorProduct(std::move(factors));
}

std::string OperatorProduct::to_string() const {
  std::string s;
  for (const Factor& f : factors_) {
    if (!s.empty()) s += ' ';
    switch (f.kind) {
      case Kind::Annihilate: s += 'a'; break;
      case Kind::Create: s += "ad"; break;
      case Kind::Number: s += 'n'; break;
      case Kind::X: s += 'x'; break;
      case Kind::P: s += 'p'; break;
    }
    s += std::to_string(f.mode + 1);
  }
  return s;
}

StateVector OperatorProduct::apply(const StateVector& state) const {
  const FockSpace& space = state.space();
  StateVector cur = state;
  StateVector lo(space), hi(space);
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) {
    space.check_mode(it->mode);
    switch (it->kind) {
      case Kind::Annihilate:
        apply_annihilate(space, it->mode, cur.amplitudes(), lo.amplitudes());
        std::swap(cur, lo);
        break;
      case Kind::Create:
        apply_create(space, it->mode, cur.amplitudes(), hi.amplitudes());
        std::swap(cur, hi);
        break;
      case Kind::Number:
        apply_number(space, it->mode, cur.amplitudes(), lo.amplitudes());
        std::swap(cur, lo);
        break;
      case Kind::X:
      case Kind::P: {
        apply_annihilate(space, it->mode, cur.amplitudes(), lo.amplitudes());
        apply_create(space, it->mode, cur.amplitudes(), hi.amplitudes());
        // p = (a - a^dag)/i = -i a + i a^dag
        const cplx ca = it->kind == Kind::X ? cplx{1.0, 0.0} : cplx{0.0, -1.0};
        const cplx cc = it->kind == Kind::X ? cplx{1.0, 0.0} : cplx{0.0, 1.0};
        for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = ca * lo[i] + cc * hi[i];
        break;
      }
    }
  }
  return cur;
}

cplx pair_expect(const StateVector& state, const OperatorProduct& op) {
  const StateVector applied = op.apply(state);
  return inner(state.amplitudes(), applied.amplitudes()) / state.norm_squared();
}

cplx pair_expect(const StateVector& state, std::string_view op_text) {
  return pair_expect(state, OperatorProduct::parse(op_text));
}

}  // namespace qtraj
