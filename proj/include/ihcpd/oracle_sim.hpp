#pragma once

// Synthetic piecewise-stationary data and brute-force oracles.
//
// The oracles deliberately share no code with the trellis or the CRP
// bookkeeping: within-segment label probabilities come from the closed-form
// exchangeable partition probability, and run-length joints are obtained by
// enumerating every reset pattern.

#include "ihcpd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <vector>

namespace ihcpd::oracle {

struct SegmentSpec {
  std::size_t length = 1;
  double mu = 0.0;
  double var = 1.0;
  std::size_t class_id = 1;
};

struct SyntheticSeries {
  std::vector<double> series;
  // 0-based index of the first sample of every segment after the first.
  std::vector<std::size_t> true_cps;
  std::vector<std::size_t> true_labels;
};

inline SyntheticSeries gen_piecewise_gaussian(std::span<const SegmentSpec> segments, std::mt19937_64 &rng) {
  require(!segments.empty(), "gen_piecewise_gaussian: no segments");
  SyntheticSeries out;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const SegmentSpec &seg = segments[s];
    require(seg.length >= 1, "gen_piecewise_gaussian: segment length must be >= 1");
    require(seg.var > 0.0 && std::isfinite(seg.var), "gen_piecewise_gaussian: variance must be positive");
    if (s > 0) out.true_cps.push_back(out.series.size());
    std::normal_distribution<double> draw(seg.mu, std::sqrt(seg.var));
    for (std::size_t i = 0; i < seg.length; ++i) {
      out.series.push_back(draw(rng));
      out.true_labels.push_back(seg.class_id);
    }
  }
  return out;
}

inline SyntheticSeries gen_piecewise_gaussian(std::span<const SegmentSpec> segments, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return gen_piecewise_gaussian(segments, rng);
}

// The oracles accumulate in long double (64-bit mantissa on x86-64) so their
// rounding error sits well below the tolerances they are checked against.
using Wide = long double;

// Neumaier-compensated log-sum-exp accumulator.
class CompensatedLogSum {
public:
  void add(Wide log_value) { terms_.push_back(log_value); }

  double log_total() const { return static_cast<double>(log_total_wide()); }

  Wide log_total_wide() const {
    Wide m = -std::numeric_limits<Wide>::infinity();
    for (Wide v : terms_) m = std::max(m, v);
    if (!std::isfinite(m)) return m;
    Wide sum = 0.0L;
    Wide comp = 0.0L;
    for (Wide v : terms_) {
      const Wide term = std::exp(v - m);
      const Wide t = sum + term;
      comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
      sum = t;
    }
    return m + std::log(sum + comp);
  }

private:
  std::vector<Wide> terms_;
};

// log of the CRP exchangeable partition probability of a label sequence:
// alpha^K Gamma(alpha) / Gamma(alpha + n) * prod_k Gamma(n_k).
inline Wide log_eppf_wide(std::span<const std::size_t> labels, double alpha) {
  if (labels.empty()) return 0.0L;
  std::map<std::size_t, std::size_t> blocks;
  for (std::size_t z : labels) ++blocks[z];
  const Wide a = alpha;
  const Wide n = static_cast<Wide>(labels.size());
  Wide lp = std::lgamma(a) - std::lgamma(a + n);
  for (const auto &[label, size] : blocks) lp += std::log(a) + std::lgamma(static_cast<Wide>(size));
  return lp;
}

inline double log_eppf(std::span<const std::size_t> labels, double alpha) {
  return static_cast<double>(log_eppf_wide(labels, alpha));
}

inline constexpr std::size_t kMaxEnumerationLength = 12;

namespace detail {

inline Wide log_reset(double lambda) { return -std::log(static_cast<Wide>(lambda)); }

inline Wide log_growth(double lambda) {
  return lambda == 1.0 ? -std::numeric_limits<Wide>::infinity() : std::log1p(-1.0L / static_cast<Wide>(lambda));
}

inline std::vector<double> collapse(const std::vector<CompensatedLogSum> &by_run) {
  std::vector<double> out(by_run.size());
  for (std::size_t r = 0; r < by_run.size(); ++r) out[r] = by_run[r].log_total();
  return out;
}

} // namespace detail

// Exact log p(r_T, z*_{1:T}) for r_T = 0..T by enumerating all 2^T reset patterns.
//
// A reset at step t means r_t = 0: z_t is paid with probability one and opens
// no window; the labels after it, up to the next reset, form one CRP segment.
inline std::vector<double> brute_force_joint(std::span<const std::size_t> labels, double alpha, double lambda) {
  const std::size_t T = labels.size();
  require(T >= 1 && T <= kMaxEnumerationLength, "brute_force_joint: length outside enumeration bound");
  require(alpha > 0.0 && lambda >= 1.0, "brute_force_joint: invalid hyperparameters");
  const Wide log_h = detail::log_reset(lambda);
  const Wide log_g = detail::log_growth(lambda);

  std::vector<CompensatedLogSum> by_run(T + 1);
  for (std::size_t mask = 0; mask < (std::size_t{1} << T); ++mask) {
    Wide lp = 0.0L;
    std::size_t seg_start = 0; // first label (0-based) of the current segment
    for (std::size_t t = 0; t < T; ++t) {
      if (mask & (std::size_t{1} << t)) {
        lp += log_h + log_eppf_wide(labels.subspan(seg_start, t - seg_start), alpha);
        seg_start = t + 1;
      } else {
        lp += log_g;
      }
    }
    lp += log_eppf_wide(labels.subspan(seg_start, T - seg_start), alpha);
    by_run[T - seg_start].add(lp);
  }
  return detail::collapse(by_run);
}

// Same quantity, enumerated by recursively choosing the next reset time.
inline std::vector<double> brute_force_joint_by_splitting(std::span<const std::size_t> labels, double alpha,
                                                          double lambda) {
  const std::size_t T = labels.size();
  require(T >= 1 && T <= kMaxEnumerationLength, "brute_force_joint_by_splitting: length outside bound");
  require(alpha > 0.0 && lambda >= 1.0, "brute_force_joint_by_splitting: invalid hyperparameters");
  const Wide log_h = detail::log_reset(lambda);
  const Wide log_g = detail::log_growth(lambda);
  std::vector<CompensatedLogSum> by_run(T + 1);

  // seg_start: first label of the open segment; acc: log probability of everything before it.
  std::function<void(std::size_t, Wide)> extend = [&](std::size_t seg_start, Wide acc) {
    // No further reset: the segment runs to T.
    const std::size_t tail = T - seg_start;
    const Wide grow = tail == 0 ? 0.0L : static_cast<Wide>(tail) * log_g;
    by_run[tail].add(acc + grow + log_eppf_wide(labels.subspan(seg_start, tail), alpha));
    // Next reset at step s (0-based), closing the segment [seg_start, s).
    for (std::size_t s = seg_start; s < T; ++s) {
      const std::size_t len = s - seg_start;
      const Wide closed = (len == 0 ? 0.0L : static_cast<Wide>(len) * log_g) + log_h +
                          log_eppf_wide(labels.subspan(seg_start, len), alpha);
      extend(s + 1, acc + closed);
    }
  };
  extend(0, 0.0L);
  return detail::collapse(by_run);
}

// Central-difference gradient of f at point.
inline std::vector<double> finite_difference(const std::function<double(std::span<const double>)> &f,
                                             std::span<const double> point, double step) {
  require(step > 0.0, "finite_difference: step must be positive");
  std::vector<double> grad(point.size());
  std::vector<double> probe(point.begin(), point.end());
  for (std::size_t i = 0; i < point.size(); ++i) {
    probe[i] = point[i] + step;
    const double up = f(probe);
    probe[i] = point[i] - step;
    const double down = f(probe);
    probe[i] = point[i];
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

} // namespace ihcpd::oracle
