#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace symplectic {

// Number of representable doubles between a and b (0 when equal, including
// +0 vs -0). Returns the int64 maximum if either is NaN.
inline std::int64_t ulp_distance(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<std::int64_t>::max();
  auto ordered = [](double x) {
    const auto bits = std::bit_cast<std::int64_t>(x);
    return bits < 0 ? std::numeric_limits<std::int64_t>::min() - bits : bits;
  };
  const std::int64_t ia = ordered(a);
  const std::int64_t ib = ordered(b);
  // Differences of ordered keys cannot overflow for finite values of equal
  // sign; opposite-sign pairs are combined through unsigned arithmetic.
  const auto d = static_cast<std::uint64_t>(ia) - static_cast<std::uint64_t>(ib);
  const auto mag = ia >= ib ? d : ~d + 1;
  return mag > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())
             ? std::numeric_limits<std::int64_t>::max()
             : static_cast<std::int64_t>(mag);
}

inline double relative_difference(double a, double b) {
  const double scale = std::max(std::fabs(a), std::fabs(b));
  return scale == 0.0 ? 0.0 : std::fabs(a - b) / scale;
}

}  // namespace symplectic
