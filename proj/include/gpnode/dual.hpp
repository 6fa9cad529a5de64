#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <limits>

namespace gpnode {

// Fixed-capacity forward-mode dual number. A value carries up to `Cap`
// derivative slots; plain constants have n == 0 and broadcast against any
// operand. Binary operations require both operands constant or of equal
// active size.
template <int Cap>
struct DualN {
  double v = 0.0;
  int n = 0;
  std::array<double, Cap> d{};

  DualN() = default;
  DualN(double value) : v(value) {}  // NOLINT: implicit constant lift

  static DualN seed(double value, int dim, int slot) {
    assert(dim <= Cap && slot >= 0 && slot < dim);
    DualN out;
    out.v = value;
    out.n = dim;
    out.d.fill(0.0);
    out.d[static_cast<std::size_t>(slot)] = 1.0;
    return out;
  }

  static DualN constant_of(double value, int dim) {
    DualN out;
    out.v = value;
    out.n = dim;
    out.d.fill(0.0);
    return out;
  }

  double deriv(int i) const { return i < n ? d[static_cast<std::size_t>(i)] : 0.0; }
};

namespace detail {
template <int Cap>
inline int join(const DualN<Cap>& a, const DualN<Cap>& b) {
  assert(a.n == 0 || b.n == 0 || a.n == b.n);
  return a.n > b.n ? a.n : b.n;
}
}  // namespace detail

template <int Cap>
inline DualN<Cap> operator+(const DualN<Cap>& a, const DualN<Cap>& b) {
  DualN<Cap> out;
  out.v = a.v + b.v;
  out.n = detail::join(a, b);
  for (int i = 0; i < out.n; ++i) out.d[i] = a.deriv(i) + b.deriv(i);
  return out;
}

template <int Cap>
inline DualN<Cap> operator-(const DualN<Cap>& a, const DualN<Cap>& b) {
  DualN<Cap> out;
  out.v = a.v - b.v;
  out.n = detail::join(a, b);
  for (int i = 0; i < out.n; ++i) out.d[i] = a.deriv(i) - b.deriv(i);
  return out;
}

template <int Cap>
inline DualN<Cap> operator-(const DualN<Cap>& a) {
  DualN<Cap> out;
  out.v = -a.v;
  out.n = a.n;
  for (int i = 0; i < a.n; ++i) out.d[i] = -a.d[i];
  return out;
}

template <int Cap>
inline DualN<Cap> operator*(const DualN<Cap>& a, const DualN<Cap>& b) {
  DualN<Cap> out;
  out.v = a.v * b.v;
  out.n = detail::join(a, b);
  for (int i = 0; i < out.n; ++i) out.d[i] = a.deriv(i) * b.v + a.v * b.deriv(i);
  return out;
}

template <int Cap>
inline DualN<Cap> operator/(const DualN<Cap>& a, const DualN<Cap>& b) {
  DualN<Cap> out;
  const double inv = 1.0 / b.v;
  out.v = a.v * inv;
  out.n = detail::join(a, b);
  for (int i = 0; i < out.n; ++i) out.d[i] = (a.deriv(i) - out.v * b.deriv(i)) * inv;
  return out;
}

template <int Cap> inline DualN<Cap> operator+(const DualN<Cap>& a, double b) { return a + DualN<Cap>(b); }
template <int Cap> inline DualN<Cap> operator+(double a, const DualN<Cap>& b) { return DualN<Cap>(a) + b; }
template <int Cap> inline DualN<Cap> operator-(const DualN<Cap>& a, double b) { return a - DualN<Cap>(b); }
template <int Cap> inline DualN<Cap> operator-(double a, const DualN<Cap>& b) { return DualN<Cap>(a) - b; }
template <int Cap> inline DualN<Cap> operator*(const DualN<Cap>& a, double b) { return a * DualN<Cap>(b); }
template <int Cap> inline DualN<Cap> operator*(double a, const DualN<Cap>& b) { return DualN<Cap>(a) * b; }
template <int Cap> inline DualN<Cap> operator/(const DualN<Cap>& a, double b) { return a / DualN<Cap>(b); }
template <int Cap> inline DualN<Cap> operator/(double a, const DualN<Cap>& b) { return DualN<Cap>(a) / b; }

template <int Cap>
inline DualN<Cap> exp(const DualN<Cap>& a) {
  DualN<Cap> out;
  out.v = std::exp(a.v);
  out.n = a.n;
  for (int i = 0; i < a.n; ++i) out.d[i] = out.v * a.d[i];
  return out;
}

template <int Cap>
inline DualN<Cap> log(const DualN<Cap>& a) {
  DualN<Cap> out;
  out.v = std::log(a.v);
  out.n = a.n;
  const double inv = 1.0 / a.v;
  for (int i = 0; i < a.n; ++i) out.d[i] = a.d[i] * inv;
  return out;
}

template <int Cap>
inline DualN<Cap> sqrt(const DualN<Cap>& a) {
  DualN<Cap> out;
  out.v = std::sqrt(a.v);
  out.n = a.n;
  const double half_inv = 0.5 / out.v;
  for (int i = 0; i < a.n; ++i) out.d[i] = a.d[i] * half_inv;
  return out;
}

template <int Cap>
inline DualN<Cap> log1p(const DualN<Cap>& a) {
  DualN<Cap> out;
  out.v = std::log1p(a.v);
  out.n = a.n;
  const double inv = 1.0 / (1.0 + a.v);
  for (int i = 0; i < a.n; ++i) out.d[i] = a.d[i] * inv;
  return out;
}

// x^p for real exponent, as exp(p log x); NaN outside x > 0.
template <int Cap>
inline DualN<Cap> pow(const DualN<Cap>& x, const DualN<Cap>& p) {
  if (!(x.v > 0.0)) {
    DualN<Cap> out;
    out.v = std::numeric_limits<double>::quiet_NaN();
    out.n = detail::join(x, p);
    for (int i = 0; i < out.n; ++i) out.d[i] = out.v;
    return out;
  }
  return exp(p * log(x));
}

template <int Cap> inline DualN<Cap> pow(const DualN<Cap>& x, double p) { return pow(x, DualN<Cap>(p)); }

template <int Cap> inline bool operator<(const DualN<Cap>& a, double b) { return a.v < b; }
template <int Cap> inline bool operator>(const DualN<Cap>& a, double b) { return a.v > b; }

template <int Cap>
inline bool is_finite(const DualN<Cap>& a) {
  if (!std::isfinite(a.v)) return false;
  for (int i = 0; i < a.n; ++i)
    if (!std::isfinite(a.d[i])) return false;
  return true;
}

// Capacity shared by the model Jacobian paths: state dim + rhs parameter
// count never exceeds 24 across the built-in systems.
using Dual = DualN<24>;

}  // namespace gpnode
