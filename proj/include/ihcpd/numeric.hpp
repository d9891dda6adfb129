#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace ihcpd::numeric {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without overflow.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

// log(sum_i exp(v_i)); -inf for an empty range or all -inf entries.
inline double log_sum_exp(std::span<const double> values) {
  double max_val = kNegInf;
  for (double v : values) max_val = std::max(max_val, v);
  if (max_val == kNegInf || !std::isfinite(max_val)) return max_val;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max_val);
  return max_val + std::log(sum);
}

// Index of the first maximum; ties resolve toward the lowest index.
template <typename Range>
std::size_t argmax_first(const Range &values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < std::size(values); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

} // namespace ihcpd::numeric
