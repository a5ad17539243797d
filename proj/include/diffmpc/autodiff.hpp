// Copyright 2026 The diffmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Forward-mode dual numbers.
//
// Dual<double> carries one directional derivative; nesting
// Dual<Dual<double>> carries a mixed second derivative along two seeded
// directions. Model code is written once as a template over the scalar type
// and instantiated with double, Dual<double> and Dual<Dual<double>>.

#pragma once

#include <cmath>
#include <type_traits>

namespace diffmpc {

template <class T>
struct Dual {
  T v{};  // value
  T d{};  // directional derivative

  constexpr Dual() = default;
  constexpr Dual(const T& value, const T& deriv) : v(value), d(deriv) {}

  template <class U>
    requires(std::is_arithmetic_v<U> && !std::is_same_v<T, U>)
  constexpr Dual(U value) : v(static_cast<T>(value)), d(0) {}  // NOLINT
  constexpr Dual(const T& value) : v(value), d(0) {}           // NOLINT

  constexpr Dual& operator+=(const Dual& o) {
    v += o.v;
    d += o.d;
    return *this;
  }
  constexpr Dual& operator-=(const Dual& o) {
    v -= o.v;
    d -= o.d;
    return *this;
  }
  constexpr Dual& operator*=(const Dual& o) {
    d = d * o.v + v * o.d;
    v *= o.v;
    return *this;
  }
  constexpr Dual& operator/=(const Dual& o) {
    const T inv = T(1) / o.v;
    v *= inv;
    d = (d - v * o.d) * inv;
    return *this;
  }
};

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};

// Value of a (possibly nested) dual number.
inline double primal(double x) { return x; }
template <class T>
double primal(const Dual<T>& x) {
  return primal(x.v);
}

template <class T>
constexpr Dual<T> operator-(const Dual<T>& a) {
  return {-a.v, -a.d};
}
template <class T>
constexpr Dual<T> operator+(Dual<T> a, const Dual<T>& b) {
  return a += b;
}
template <class T>
constexpr Dual<T> operator-(Dual<T> a, const Dual<T>& b) {
  return a -= b;
}
template <class T>
constexpr Dual<T> operator*(Dual<T> a, const Dual<T>& b) {
  return a *= b;
}
template <class T>
constexpr Dual<T> operator/(Dual<T> a, const Dual<T>& b) {
  return a /= b;
}

// Mixed operations with plain arithmetic scalars.
template <class T, class U>
  requires std::is_arithmetic_v<U>
constexpr Dual<T> operator+(const Dual<T>& a, U b) {
  return {a.v + b, a.d};
}
template <class T, class U>
  requires std::is_arithmetic_v<U>
constexpr Dual<T> operator+(U a, const Dual<T>& b) {
  return {a + b.v, b.d};
}
template <class T, class U>
  requires std::is_arithmetic_v<U>
constexpr Dual<T> operator-(const Dual<T>& a, U b) {
  return {a.v - b, a.d};
}
template <class T, class U>
  requires std::is_arithmetic_v<U>
constexpr Dual<T> operator-(U a, const Dual<T>& b) {
  return {a - b.v, -b.d};
}
template <class T, class U>
  requires std::is_arithmetic_v<U>
constexpr Dual<T> operator*(const Dual<T>& a, U b) {
  return {a.v * b, a.d * b};
}
template <class T, class U>
  requires std::is_arithmetic_v<U>
constexpr Dual<T> operator*(U a, const Dual<T>& b) {
  return {a * b.v, a * b.d};
}
template <class T, class U>
  requires std::is_arithmetic_v<U>
constexpr Dual<T> operator/(const Dual<T>& a, U b) {
  return {a.v / b, a.d / b};
}
template <class T, class U>
  requires std::is_arithmetic_v<U>
constexpr Dual<T> operator/(U a, const Dual<T>& b) {
  const T inv = T(1) / b.v;
  return {a * inv, -a * b.d * inv * inv};
}

// Comparisons act on values only; branches are not differentiated.
template <class T>
constexpr bool operator<(const Dual<T>& a, const Dual<T>& b) {
  return a.v < b.v;
}
template <class T>
constexpr bool operator>(const Dual<T>& a, const Dual<T>& b) {
  return a.v > b.v;
}
template <class T, class U>
  requires std::is_arithmetic_v<U>
constexpr bool operator<(const Dual<T>& a, U b) {
  return primal(a) < b;
}
template <class T, class U>
  requires std::is_arithmetic_v<U>
constexpr bool operator>(const Dual<T>& a, U b) {
  return primal(a) > b;
}

template <class T>
Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  const T r = sqrt(a.v);
  return {r, a.d / (2.0 * r)};
}
template <class T>
Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  const T e = exp(a.v);
  return {e, a.d * e};
}
template <class T>
Dual<T> log(const Dual<T>& a) {
  using std::log;
  return {log(a.v), a.d / a.v};
}
template <class T>
Dual<T> sin(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return {sin(a.v), a.d * cos(a.v)};
}
template <class T>
Dual<T> cos(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return {cos(a.v), -(a.d * sin(a.v))};
}
template <class T>
Dual<T> tanh(const Dual<T>& a) {
  using std::tanh;
  const T th = tanh(a.v);
  return {th, a.d * (1.0 - th * th)};
}
template <class T>
Dual<T> pow(const Dual<T>& a, double p) {
  using std::pow;
  return {pow(a.v, p), a.d * (p * pow(a.v, p - 1.0))};
}
template <class T>
Dual<T> abs(const Dual<T>& a) {
  return primal(a) < 0.0 ? -a : a;
}

}  // namespace diffmpc
