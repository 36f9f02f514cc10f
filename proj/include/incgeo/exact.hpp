#pragma once

// Integer helpers for exact arithmetic on dyadic rationals.

#include <cstdint>

namespace incgeo {

using i128 = __int128;

template <typename T>
constexpr T floor_div(T a, T b) {
  // b > 0
  T q = a / b;
  if ((a % b != 0) && (a < 0)) --q;
  return q;
}

template <typename T>
constexpr T ceil_div(T a, T b) {
  T q = a / b;
  if ((a % b != 0) && (a > 0)) ++q;
  return q;
}

/// floor(sqrt(v)) for v >= 0.
inline std::int64_t isqrt(i128 v) {
  if (v <= 0) return 0;
  // Newton iteration from a power of two above the root.
  i128 x = 1;
  while (x * x <= v) x <<= 1;
  i128 y = (x + v / x) / 2;
  while (y < x) {
    x = y;
    y = (x + v / x) / 2;
  }
  return static_cast<std::int64_t>(x);
}

constexpr i128 pow2(int e) { return i128{1} << e; }

} // namespace incgeo
