#include "stencil.hpp"

#include <cmath>

namespace qtraj::detail {

namespace {

std::vector<double> ladder_table(int top, int shift) {
  // Product sqrt((n+1)...(n+shift)) for shift > 0, sqrt(n(n-1)...(n+shift+1)) for shift < 0.
  std::vector<double> t(top + 1, 0.0);
  for (int n = 0; n <= top; ++n) {
    double p = 1.0;
    if (shift > 0) {
      for (int s = 1; s <= shift; ++s) p *= n + s;
    } else {
      for (int s = 0; s < -shift; ++s) p *= std::max(n - s, 0);
    }
    t[n] = std::sqrt(p);
  }
  return t;
}

}  // namespace

TwoModeStencil::TwoModeStencil(const FockSpace& space, const HamiltonianSpec& hamiltonian)
    : n0_(space.cutoff(0)),
      n1_(space.cutoff(1)),
      rows_(static_cast<std::size_t>(n0_ + 1 + 2 * kPad)),
      width_(static_cast<std::size_t>(n1_ + 1 + 2 * kPad)) {
  if (!hamiltonian.is_free()) {
    pump_ = hamiltonian.pump;
    if (!hamiltonian.coupling.empty()) coupling_ = hamiltonian.coupling_strength * hamiltonian.coupling[0][1];
    creates_ = true;
  }
  const int tops[2] = {n0_, n1_};
  for (int k = 0; k < 2; ++k) {
    low1_[k] = ladder_table(tops[k], 1);
    low2_[k] = ladder_table(tops[k], 2);
    low4_[k] = ladder_table(tops[k], 4);
    up1_[k] = ladder_table(tops[k], -1);
    up2_[k] = ladder_table(tops[k], -2);
  }
}

TwoModeStencil::Scratch TwoModeStencil::make_scratch() const {
  Scratch s;
  s.re.assign(rows_ * width_, 0.0);
  s.im.assign(rows_ * width_, 0.0);
  s.columns.assign(11 * static_cast<std::size_t>(n1_ + 1), 0.0);
  return s;
}

TwoModeMoments TwoModeStencil::moments(std::span<const cplx> psi, Scratch& scratch, bool higher) const {
  const int len = n1_ + 1;
  for (int i0 = 0; i0 <= n0_; ++i0) {
    const cplx* src = psi.data() + i0 * len;
    double* dr = scratch.re.data() + (i0 + kPad) * width_ + kPad;
    double* di = scratch.im.data() + (i0 + kPad) * width_ + kPad;
    for (int i = 0; i < len; ++i) {
      dr[i] = src[i].real();
      di[i] = src[i].imag();
    }
  }

  TwoModeMoments m{};
  const double* l1 = low1_[1].data();
  const double* l2 = low2_[1].data();
  const double* l4 = low4_[1].data();
  double a1r = 0, a1i = 0, aa1r = 0, aa1i = 0, a41r = 0, a41i = 0, n1 = 0, nn1 = 0;
  for (int i0 = 0; i0 <= n0_; ++i0) {
    const double* __restrict zr = scratch.re.data() + (i0 + kPad) * width_ + kPad;
    const double* __restrict zi = scratch.im.data() + (i0 + kPad) * width_ + kPad;
    const double* __restrict z1r = zr + width_;
    const double* __restrict z1i = zi + width_;
    const double* __restrict z2r = zr + 2 * width_;
    const double* __restrict z2i = zi + 2 * width_;
    const double* __restrict z4r = zr + 4 * width_;
    const double* __restrict z4i = zi + 4 * width_;
    double rowsum = 0, s1r = 0, s1i = 0, s2r = 0, s2i = 0, s4r = 0, s4i = 0;
    // <z|w> = sum conj(z) w
#pragma omp simd reduction(+ : rowsum, s1r, s1i, s2r, s2i, a1r, a1i, aa1r, aa1i, n1)
    for (int i1 = 0; i1 < len; ++i1) {
      const double xr = zr[i1], xi = zi[i1];
      const double nz = xr * xr + xi * xi;
      rowsum += nz;
      n1 += i1 * nz;
      s1r += xr * z1r[i1] + xi * z1i[i1];
      s1i += xr * z1i[i1] - xi * z1r[i1];
      s2r += xr * z2r[i1] + xi * z2i[i1];
      s2i += xr * z2i[i1] - xi * z2r[i1];
      const double wr = l1[i1] * zr[i1 + 1], wi = l1[i1] * zi[i1 + 1];
      a1r += xr * wr + xi * wi;
      a1i += xr * wi - xi * wr;
      const double vr = l2[i1] * zr[i1 + 2], vi = l2[i1] * zi[i1 + 2];
      aa1r += xr * vr + xi * vi;
      aa1i += xr * vi - xi * vr;
    }
    if (higher) {
#pragma omp simd reduction(+ : s4r, s4i, a41r, a41i, nn1)
      for (int i1 = 0; i1 < len; ++i1) {
        const double xr = zr[i1], xi = zi[i1];
        nn1 += static_cast<double>(i1 * (i1 - 1)) * (xr * xr + xi * xi);
        s4r += xr * z4r[i1] + xi * z4i[i1];
        s4i += xr * z4i[i1] - xi * z4r[i1];
        const double wr = l4[i1] * zr[i1 + 4], wi = l4[i1] * zi[i1 + 4];
        a41r += xr * wr + xi * wi;
        a41i += xr * wi - xi * wr;
      }
    }
    m.norm2 += rowsum;
    m.a[0] += low1_[0][i0] * cplx{s1r, s1i};
    m.aa[0] += low2_[0][i0] * cplx{s2r, s2i};
    m.n[0] += i0 * rowsum;
    if (higher) {
      m.a4[0] += low4_[0][i0] * cplx{s4r, s4i};
      m.nn1[0] += static_cast<double>(i0 * (i0 - 1)) * rowsum;
    }
  }
  m.a[1] = {a1r, a1i};
  m.aa[1] = {aa1r, aa1i};
  m.a4[1] = {a41r, a41i};
  m.n[1] = n1;
  m.nn1[1] = nn1;

  if (creates_) {
    // Probability that the creation operators push past the cutoff, summed the
    // same way as applying each raising operator in turn.
    auto at = [&](int i0, int i1) { return std::norm(psi[i0 * len + i1]); };
    double d = 0.0;
    if (pump_ != 0.0) {
      for (int i1 = 0; i1 <= n1_; ++i1) d += at(n0_, i1) + n0_ * at(n0_ - 1, i1);
      for (int i0 = 0; i0 <= n0_; ++i0) d += at(i0, n1_) + n1_ * at(i0, n1_ - 1);
    }
    if (coupling_ != 0.0) {
      for (int i0 = 0; i0 <= n0_; ++i0) d += at(i0, n1_);
      for (int i1 = 0; i1 < n1_; ++i1) d += (i1 + 1) * at(n0_, i1);
    }
    m.dropped = d;
  }
  return m;
}

void TwoModeStencil::apply(const StencilCoefs& c, Scratch& scratch, std::span<cplx> out) const {
  const int len = n1_ + 1;
  // Column tables: coefficient times ladder factor for the in-row shifts.
  double* col = scratch.columns.data();
  double* __restrict t1r = col;
  double* __restrict t1i = col + len;
  double* __restrict t2r = col + 2 * len;
  double* __restrict t2i = col + 3 * len;
  double* __restrict t4r = col + 4 * len;
  double* __restrict t4i = col + 5 * len;
  double* __restrict u2r = col + 6 * len;
  double* __restrict u2i = col + 7 * len;
  double* __restrict dn = col + 8 * len;
  double* __restrict u1 = col + 9 * len;
  double* __restrict l1 = col + 10 * len;
  for (int i1 = 0; i1 < len; ++i1) {
    t1r[i1] = c.low1[1].real() * low1_[1][i1];
    t1i[i1] = c.low1[1].imag() * low1_[1][i1];
    t2r[i1] = c.low2[1].real() * low2_[1][i1];
    t2i[i1] = c.low2[1].imag() * low2_[1][i1];
    t4r[i1] = c.low4[1].real() * low4_[1][i1];
    t4i[i1] = c.low4[1].imag() * low4_[1][i1];
    u2r[i1] = c.up2[1].real() * up2_[1][i1];
    u2i[i1] = c.up2[1].imag() * up2_[1][i1];
    dn[i1] = c.diag_n[1] * i1 + c.diag_nn1[1] * static_cast<double>(i1 * (i1 - 1));
    u1[i1] = up1_[1][i1];
    l1[i1] = low1_[1][i1];
  }
  const bool joint = c.up11 != cplx{0.0, 0.0} || c.low11 != cplx{0.0, 0.0};

  for (int i0 = 0; i0 <= n0_; ++i0) {
    const std::size_t base = (i0 + kPad) * width_ + kPad;
    const double* __restrict xr = scratch.re.data() + base;
    const double* __restrict xi = scratch.im.data() + base;
    const double* __restrict m1r = xr - width_;
    const double* __restrict m1i = xi - width_;
    const double* __restrict m2r = xr - 2 * width_;
    const double* __restrict m2i = xi - 2 * width_;
    const double* __restrict p1r = xr + width_;
    const double* __restrict p1i = xi + width_;
    const double* __restrict p2r = xr + 2 * width_;
    const double* __restrict p2i = xi + 2 * width_;
    const double* __restrict p4r = xr + 4 * width_;
    const double* __restrict p4i = xi + 4 * width_;
    const cplx cd = c.diag + c.diag_n[0] * i0 + c.diag_nn1[0] * static_cast<double>(i0 * (i0 - 1));
    const cplx cp1 = c.low1[0] * low1_[0][i0];
    const cplx cp2 = c.low2[0] * low2_[0][i0];
    const cplx cp4 = c.low4[0] * low4_[0][i0];
    const cplx cm2 = c.up2[0] * up2_[0][i0];
    const cplx cu = c.up11 * up1_[0][i0];
    const cplx cl = c.low11 * low1_[0][i0];
    const double cdr = cd.real(), cdi = cd.imag();
    const double p1cr = cp1.real(), p1ci = cp1.imag(), p2cr = cp2.real(), p2ci = cp2.imag();
    const double p4cr = cp4.real(), p4ci = cp4.imag(), m2cr = cm2.real(), m2ci = cm2.imag();
    const double cur = cu.real(), cui = cu.imag(), clr = cl.real(), cli = cl.imag();
    double* __restrict o = reinterpret_cast<double*>(out.data() + i0 * len);

#pragma omp simd
    for (int i1 = 0; i1 < len; ++i1) {
      const double dr = cdr + dn[i1];
      double vr = dr * xr[i1] - cdi * xi[i1];
      double vi = dr * xi[i1] + cdi * xr[i1];
      vr += p1cr * p1r[i1] - p1ci * p1i[i1];
      vi += p1cr * p1i[i1] + p1ci * p1r[i1];
      vr += p2cr * p2r[i1] - p2ci * p2i[i1];
      vi += p2cr * p2i[i1] + p2ci * p2r[i1];
      vr += m2cr * m2r[i1] - m2ci * m2i[i1];
      vi += m2cr * m2i[i1] + m2ci * m2r[i1];
      vr += t1r[i1] * xr[i1 + 1] - t1i[i1] * xi[i1 + 1];
      vi += t1r[i1] * xi[i1 + 1] + t1i[i1] * xr[i1 + 1];
      vr += t2r[i1] * xr[i1 + 2] - t2i[i1] * xi[i1 + 2];
      vi += t2r[i1] * xi[i1 + 2] + t2i[i1] * xr[i1 + 2];
      vr += u2r[i1] * xr[i1 - 2] - u2i[i1] * xi[i1 - 2];
      vi += u2r[i1] * xi[i1 - 2] + u2i[i1] * xr[i1 - 2];
      o[2 * i1] = vr;
      o[2 * i1 + 1] = vi;
    }
    if (cp4 != cplx{0.0, 0.0} || c.low4[1] != cplx{0.0, 0.0}) {
#pragma omp simd
      for (int i1 = 0; i1 < len; ++i1) {
        o[2 * i1] += p4cr * p4r[i1] - p4ci * p4i[i1] + t4r[i1] * xr[i1 + 4] - t4i[i1] * xi[i1 + 4];
        o[2 * i1 + 1] += p4cr * p4i[i1] + p4ci * p4r[i1] + t4r[i1] * xi[i1 + 4] + t4i[i1] * xr[i1 + 4];
      }
    }
    if (joint) {
#pragma omp simd
      for (int i1 = 0; i1 < len; ++i1) {
        const double ar = u1[i1] * m1r[i1 - 1], ai = u1[i1] * m1i[i1 - 1];
        const double br = l1[i1] * p1r[i1 + 1], bi = l1[i1] * p1i[i1 + 1];
        o[2 * i1] += cur * ar - cui * ai + clr * br - cli * bi;
        o[2 * i1 + 1] += cur * ai + cui * ar + clr * bi + cli * br;
      }
    }
  }
}

}  // namespace qtraj::detail
