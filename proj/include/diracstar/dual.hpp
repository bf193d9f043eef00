#pragma once

#include <array>
#include <cmath>

namespace diracstar {

// Forward-mode dual number with K tangent directions.
template <int K>
struct Dual {
  double v = 0.0;
  std::array<double, K> d{};

  Dual() = default;
  Dual(double x) : v(x) {}

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int k = 0; k < K; ++k) d[k] += o.d[k];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int k = 0; k < K; ++k) d[k] -= o.d[k];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (int k = 0; k < K; ++k) d[k] = d[k] * o.v + v * o.d[k];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    double inv = 1.0 / o.v;
    double q = v * inv;
    for (int k = 0; k < K; ++k) d[k] = (d[k] - q * o.d[k]) * inv;
    v = q;
    return *this;
  }
};

template <int K> Dual<K> operator+(Dual<K> a, const Dual<K>& b) { return a += b; }
template <int K> Dual<K> operator-(Dual<K> a, const Dual<K>& b) { return a -= b; }
template <int K> Dual<K> operator*(Dual<K> a, const Dual<K>& b) { return a *= b; }
template <int K> Dual<K> operator/(Dual<K> a, const Dual<K>& b) { return a /= b; }
template <int K> Dual<K> operator+(Dual<K> a, double b) { a.v += b; return a; }
template <int K> Dual<K> operator+(double b, Dual<K> a) { a.v += b; return a; }
template <int K> Dual<K> operator-(Dual<K> a, double b) { a.v -= b; return a; }
template <int K> Dual<K> operator-(double b, const Dual<K>& a) {
  Dual<K> r;
  r.v = b - a.v;
  for (int k = 0; k < K; ++k) r.d[k] = -a.d[k];
  return r;
}
template <int K> Dual<K> operator-(const Dual<K>& a) { return 0.0 - a; }
template <int K> Dual<K> operator*(Dual<K> a, double b) {
  a.v *= b;
  for (auto& x : a.d) x *= b;
  return a;
}
template <int K> Dual<K> operator*(double b, Dual<K> a) { return a * b; }
template <int K> Dual<K> operator/(Dual<K> a, double b) { return a * (1.0 / b); }
template <int K> Dual<K> operator/(double b, const Dual<K>& a) { return Dual<K>(b) / a; }

template <int K>
Dual<K> chain(const Dual<K>& a, double f, double df) {
  Dual<K> r;
  r.v = f;
  for (int k = 0; k < K; ++k) r.d[k] = df * a.d[k];
  return r;
}

template <int K> Dual<K> exp(const Dual<K>& a) { double e = std::exp(a.v); return chain(a, e, e); }
template <int K> Dual<K> expm1(const Dual<K>& a) { return chain(a, std::expm1(a.v), std::exp(a.v)); }
template <int K> Dual<K> sqrt(const Dual<K>& a) { double s = std::sqrt(a.v); return chain(a, s, 0.5 / s); }
template <int K> Dual<K> log(const Dual<K>& a) { return chain(a, std::log(a.v), 1.0 / a.v); }
template <int K> Dual<K> log1p(const Dual<K>& a) { return chain(a, std::log1p(a.v), 1.0 / (1.0 + a.v)); }

inline double value(double x) { return x; }
template <int K> double value(const Dual<K>& x) { return x.v; }

}  // namespace diracstar
