#pragma once

/// \file jet.hpp
/// Forward-mode differentiation carriers.
///
/// `Dual<T>` carries a value and a gradient (first order). Nesting is allowed,
/// `Dual<Dual<double>>` gives second derivatives. `Jet2` carries value,
/// gradient and the upper triangle of the Hessian directly, which is what the
/// curvature code consumes for metric entries.

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>

namespace foliate {

/// Upper bound on chart dimension handled by the fixed-capacity jets.
inline constexpr int kMaxDim = 6;
inline constexpr int kHessSize = kMaxDim * (kMaxDim + 1) / 2;

/// Index into packed upper-triangular storage (row-major, i <= j).
constexpr int packed_index(int i, int j) noexcept {
  if (i > j) std::swap(i, j);
  return i * kMaxDim - i * (i - 1) / 2 + (j - i);
}

// --------------------------------------------------------------------------
// Dual
// --------------------------------------------------------------------------

template <typename T>
struct Dual {
  using value_type = T;

  T v{};
  std::array<T, kMaxDim> d{};

  constexpr Dual() = default;
  constexpr Dual(double c) : v(c) {}  // NOLINT: implicit from constants
  template <typename U>
    requires(!std::is_arithmetic_v<T> && std::is_arithmetic_v<U> && !std::is_same_v<U, double>)
  constexpr Dual(U c) : v(static_cast<double>(c)) {}
  constexpr Dual(int c) : v(static_cast<double>(c)) {}
  constexpr Dual(long c) : v(static_cast<double>(c)) {}
  template <typename U = T>
    requires(!std::is_arithmetic_v<U>)
  constexpr Dual(const T& value) : v(value) {}

  /// Independent variable number `i` with value `x`.
  static Dual variable(T x, int i) {
    Dual r(x);
    r.d[static_cast<std::size_t>(i)] = T(1.0);
    return r;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < kMaxDim; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < kMaxDim; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (int i = 0; i < kMaxDim; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    T inv = T(1.0) / o.v;
    T q = v * inv;
    for (int i = 0; i < kMaxDim; ++i) d[i] = (d[i] - q * o.d[i]) * inv;
    v = q;
    return *this;
  }
};

template <typename T> Dual<T> operator+(Dual<T> a, const Dual<T>& b) { return a += b; }
template <typename T> Dual<T> operator-(Dual<T> a, const Dual<T>& b) { return a -= b; }
template <typename T> Dual<T> operator*(Dual<T> a, const Dual<T>& b) { return a *= b; }
template <typename T> Dual<T> operator/(Dual<T> a, const Dual<T>& b) { return a /= b; }
template <typename T> Dual<T> operator+(Dual<T> a, double b) { a.v += b; return a; }
template <typename T> Dual<T> operator+(double b, Dual<T> a) { a.v += b; return a; }
template <typename T> Dual<T> operator-(Dual<T> a, double b) { a.v -= b; return a; }
template <typename T> Dual<T> operator-(double b, const Dual<T>& a) { return Dual<T>(b) - a; }
template <typename T> Dual<T> operator*(Dual<T> a, double b) {
  a.v *= b;
  for (auto& x : a.d) x *= b;
  return a;
}
template <typename T> Dual<T> operator*(double b, Dual<T> a) { return a * b; }
template <typename T> Dual<T> operator/(Dual<T> a, double b) { return a * (1.0 / b); }
template <typename T> Dual<T> operator/(double b, const Dual<T>& a) { return Dual<T>(b) / a; }
template <typename T> Dual<T> operator-(Dual<T> a) {
  a.v = -a.v;
  for (auto& x : a.d) x = -x;
  return a;
}
template <typename T> Dual<T> operator+(const Dual<T>& a) { return a; }

template <typename T> bool operator<(const Dual<T>& a, const Dual<T>& b) { return a.v < b.v; }
template <typename T> bool operator>(const Dual<T>& a, const Dual<T>& b) { return a.v > b.v; }
template <typename T> bool operator<=(const Dual<T>& a, const Dual<T>& b) { return a.v <= b.v; }
template <typename T> bool operator>=(const Dual<T>& a, const Dual<T>& b) { return a.v >= b.v; }
template <typename T> bool operator==(const Dual<T>& a, const Dual<T>& b) { return a.v == b.v; }
template <typename T> bool operator!=(const Dual<T>& a, const Dual<T>& b) { return a.v != b.v; }

namespace detail {
/// f(a) given f(a.v), f'(a.v).
template <typename T>
Dual<T> chain(const Dual<T>& a, T f0, T f1) {
  Dual<T> r(f0);
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = f1 * a.d[i];
  return r;
}
}  // namespace detail

template <typename T> Dual<T> sin(const Dual<T>& a) { using std::sin, std::cos; return detail::chain(a, sin(a.v), cos(a.v)); }
template <typename T> Dual<T> cos(const Dual<T>& a) { using std::sin, std::cos; return detail::chain(a, cos(a.v), -sin(a.v)); }
template <typename T> Dual<T> tan(const Dual<T>& a) {
  using std::tan;
  T t = tan(a.v);
  return detail::chain(a, t, T(1.0) + t * t);
}
template <typename T> Dual<T> exp(const Dual<T>& a) { using std::exp; T e = exp(a.v); return detail::chain(a, e, e); }
template <typename T> Dual<T> log(const Dual<T>& a) { using std::log; return detail::chain(a, log(a.v), T(1.0) / a.v); }
template <typename T> Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  T s = sqrt(a.v);
  return detail::chain(a, s, T(0.5) / s);
}
template <typename T> Dual<T> sinh(const Dual<T>& a) { using std::sinh, std::cosh; return detail::chain(a, sinh(a.v), cosh(a.v)); }
template <typename T> Dual<T> cosh(const Dual<T>& a) { using std::sinh, std::cosh; return detail::chain(a, cosh(a.v), sinh(a.v)); }
template <typename T> Dual<T> tanh(const Dual<T>& a) {
  using std::tanh;
  T t = tanh(a.v);
  return detail::chain(a, t, T(1.0) - t * t);
}
template <typename T> Dual<T> atan(const Dual<T>& a) { using std::atan; return detail::chain(a, atan(a.v), T(1.0) / (T(1.0) + a.v * a.v)); }
template <typename T> Dual<T> abs(const Dual<T>& a) { return a.v < T(0.0) ? -a : a; }

// --------------------------------------------------------------------------
// Jet2
// --------------------------------------------------------------------------

/// Second-order forward jet: value, gradient, symmetric Hessian (upper
/// triangle stored, so symmetry is exact).
struct Jet2 {
  double v = 0.0;
  std::array<double, kMaxDim> g{};
  std::array<double, kHessSize> h{};

  constexpr Jet2() = default;
  constexpr Jet2(double c) : v(c) {}  // NOLINT

  static Jet2 variable(double x, int i) {
    Jet2 r(x);
    r.g[static_cast<std::size_t>(i)] = 1.0;
    return r;
  }

  double grad(int i) const { return g[static_cast<std::size_t>(i)]; }
  double hess(int i, int j) const { return h[static_cast<std::size_t>(packed_index(i, j))]; }

  Jet2& operator+=(const Jet2& o) {
    v += o.v;
    for (int i = 0; i < kMaxDim; ++i) g[i] += o.g[i];
    for (int k = 0; k < kHessSize; ++k) h[k] += o.h[k];
    return *this;
  }
  Jet2& operator-=(const Jet2& o) {
    v -= o.v;
    for (int i = 0; i < kMaxDim; ++i) g[i] -= o.g[i];
    for (int k = 0; k < kHessSize; ++k) h[k] -= o.h[k];
    return *this;
  }
  Jet2& operator*=(const Jet2& o) {
    int k = 0;
    for (int i = 0; i < kMaxDim; ++i) {
      for (int j = i; j < kMaxDim; ++j, ++k) {
        h[k] = v * o.h[k] + o.v * h[k] + g[i] * o.g[j] + g[j] * o.g[i];
      }
    }
    for (int i = 0; i < kMaxDim; ++i) g[i] = v * o.g[i] + o.v * g[i];
    v *= o.v;
    return *this;
  }
  Jet2& operator*=(double c) {
    v *= c;
    for (auto& x : g) x *= c;
    for (auto& x : h) x *= c;
    return *this;
  }
};

namespace detail {
/// f(a) given f, f', f'' at a.v.
inline Jet2 chain2(const Jet2& a, double f0, double f1, double f2) {
  Jet2 r(f0);
  int k = 0;
  for (int i = 0; i < kMaxDim; ++i) {
    r.g[i] = f1 * a.g[i];
    for (int j = i; j < kMaxDim; ++j, ++k) r.h[k] = f1 * a.h[k] + f2 * a.g[i] * a.g[j];
  }
  return r;
}
}  // namespace detail

inline Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
inline Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
inline Jet2 operator*(Jet2 a, const Jet2& b) { return a *= b; }
inline Jet2 operator*(Jet2 a, double c) { return a *= c; }
inline Jet2 operator*(double c, Jet2 a) { return a *= c; }
inline Jet2 operator-(Jet2 a) { return a *= -1.0; }
inline Jet2 operator+(Jet2 a, double c) { a.v += c; return a; }
inline Jet2 operator+(double c, Jet2 a) { a.v += c; return a; }
inline Jet2 operator-(Jet2 a, double c) { a.v -= c; return a; }
inline Jet2 operator-(double c, const Jet2& a) { return Jet2(c) - a; }
inline Jet2 reciprocal(const Jet2& a) {
  double r = 1.0 / a.v;
  return detail::chain2(a, r, -r * r, 2.0 * r * r * r);
}
inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * reciprocal(b); }
inline Jet2 operator/(Jet2 a, double c) { return a *= (1.0 / c); }
inline Jet2 operator/(double c, const Jet2& a) { return c * reciprocal(a); }
inline bool operator<(const Jet2& a, const Jet2& b) { return a.v < b.v; }
inline bool operator>(const Jet2& a, const Jet2& b) { return a.v > b.v; }

inline Jet2 sin(const Jet2& a) { double s = std::sin(a.v), c = std::cos(a.v); return detail::chain2(a, s, c, -s); }
inline Jet2 cos(const Jet2& a) { double s = std::sin(a.v), c = std::cos(a.v); return detail::chain2(a, c, -s, -c); }
inline Jet2 tan(const Jet2& a) {
  double t = std::tan(a.v), s2 = 1.0 + t * t;
  return detail::chain2(a, t, s2, 2.0 * t * s2);
}
inline Jet2 exp(const Jet2& a) { double e = std::exp(a.v); return detail::chain2(a, e, e, e); }
inline Jet2 log(const Jet2& a) { double r = 1.0 / a.v; return detail::chain2(a, std::log(a.v), r, -r * r); }
inline Jet2 sqrt(const Jet2& a) {
  double s = std::sqrt(a.v);
  return detail::chain2(a, s, 0.5 / s, -0.25 / (s * a.v));
}
inline Jet2 sinh(const Jet2& a) { double s = std::sinh(a.v), c = std::cosh(a.v); return detail::chain2(a, s, c, s); }
inline Jet2 cosh(const Jet2& a) { double s = std::sinh(a.v), c = std::cosh(a.v); return detail::chain2(a, c, s, c); }
inline Jet2 tanh(const Jet2& a) {
  double t = std::tanh(a.v), s2 = 1.0 - t * t;
  return detail::chain2(a, t, s2, -2.0 * t * s2);
}

// --------------------------------------------------------------------------
// Scalar-generic helpers
// --------------------------------------------------------------------------

inline double primal(double x) noexcept { return x; }
inline double primal(const Jet2& x) noexcept { return x.v; }
template <typename T> double primal(const Dual<T>& x) noexcept { return primal(x.v); }

/// Seeds coordinate `i` as an independent variable for scalar type S.
template <typename S> S seed_variable(double x, int i);
template <> inline double seed_variable<double>(double x, int) { return x; }
template <> inline Jet2 seed_variable<Jet2>(double x, int i) { return Jet2::variable(x, i); }
template <> inline Dual<double> seed_variable<Dual<double>>(double x, int i) {
  return Dual<double>::variable(x, i);
}
template <> inline Dual<Dual<double>> seed_variable<Dual<Dual<double>>>(double x, int i) {
  Dual<Dual<double>> r(Dual<double>::variable(x, i));
  r.d[static_cast<std::size_t>(i)] = Dual<double>(1.0);
  return r;
}

/// Integer power by repeated squaring.
template <typename S>
S ipow(const S& base, int n) {
  if (n == 0) return S(1.0);
  if (n < 0) return S(1.0) / ipow(base, -n);
  S result(1.0);
  S b = base;
  bool first = true;
  while (n > 0) {
    if (n & 1) {
      if (first) {
        result = b;
        first = false;
      } else {
        result = result * b;
      }
    }
    n >>= 1;
    if (n > 0) b = b * b;
  }
  return result;
}

/// Dual carrying the first-order part of a Jet2.
inline Dual<double> to_dual(const Jet2& j) {
  Dual<double> r(j.v);
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = j.g[i];
  return r;
}

}  // namespace foliate
