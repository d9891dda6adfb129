#pragma once

// Chinese-restaurant-process bookkeeping over the MAP label history.
//
// Class ids are 1-based and numbered by first appearance. For every class a
// prefix-count array c_k(tau) = #{s <= tau : z*_s = k} is kept from the
// class's birth onward, so the count of k inside any trailing window is two
// lookups. The class-probability vector itself is integrated out and never
// represented.

#include "ihcpd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ihcpd {

using Rng = std::mt19937_64;

// Uniform double in [0, 1) built from the top 53 bits; identical across standard libraries.
inline double uniform01(Rng &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

class CrpState {
public:
  explicit CrpState(double alpha) : alpha_(alpha) {
    if (!(std::isfinite(alpha) && alpha > 0.0)) throw ConfigError("CRP alpha must be positive");
  }

  double alpha() const { return alpha_; }
  std::size_t t() const { return labels_.size(); }
  std::size_t num_classes() const { return prefix_.size(); }
  const std::vector<std::size_t> &labels() const { return labels_; }

  // c_k(tau) for 0 <= tau <= t.
  std::size_t count_at(std::size_t k, std::size_t tau) const {
    require(k >= 1 && k <= num_classes(), "CrpState: class id out of range");
    require(tau <= t(), "CrpState: time index in the future");
    const std::size_t start = birth_[k - 1] - 1; // prefix_[k-1][0] holds c_k(birth - 1) = 0
    if (tau < start) return 0;
    return prefix_[k - 1][tau - start];
  }

  std::size_t count(std::size_t k) const { return count_at(k, t()); }

  // Occurrences of class k among the last r labels; unknown classes count zero.
  std::size_t window_count(std::size_t k, std::size_t r) const {
    require(r <= t(), "CrpState: window longer than history");
    if (k < 1 || k > num_classes()) return 0;
    return count_at(k, t()) - count_at(k, t() - r);
  }

  void record(std::size_t k) {
    require(k >= 1 && k <= num_classes() + 1, "record_assignment: class id skips past K+1");
    if (k == num_classes() + 1) {
      birth_.push_back(t() + 1);
      prefix_.push_back({0});
    }
    labels_.push_back(k);
    for (std::size_t j = 0; j < prefix_.size(); ++j) {
      prefix_[j].push_back(prefix_[j].back() + (j + 1 == k ? 1 : 0));
    }
  }

private:
  double alpha_;
  std::vector<std::size_t> labels_;
  std::vector<std::size_t> birth_;               // time of first assignment, 1-based
  std::vector<std::vector<std::size_t>> prefix_; // per class, c_k(tau) for tau >= birth - 1
};

inline CrpState record_assignment(CrpState state, std::size_t k) {
  state.record(k);
  return state;
}

// p(z_t = k | z_{1:t-1}) for k = 1..K (existing, by count) and K+1 (new table).
inline std::vector<double> global_predictive(const CrpState &state) {
  const double denom = static_cast<double>(state.t()) + state.alpha();
  std::vector<double> p(state.num_classes() + 1);
  for (std::size_t k = 1; k <= state.num_classes(); ++k) {
    p[k - 1] = static_cast<double>(state.count(k)) / denom;
  }
  p.back() = state.alpha() / denom;
  return p;
}

// Categorical draw; returns a 1-based class id.
inline std::size_t sample_class(std::span<const double> predictive, Rng &rng) {
  require(!predictive.empty(), "sample_class: empty distribution");
  double total = 0.0;
  for (double p : predictive) {
    require(p >= 0.0 && std::isfinite(p), "sample_class: invalid probability");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-12, "sample_class: probabilities do not sum to one");
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < predictive.size(); ++i) {
    acc += predictive[i];
    if (u < acc) return i + 1;
  }
  // u landed in the rounding gap at the top; take the last non-zero entry.
  for (std::size_t i = predictive.size(); i-- > 0;) {
    if (predictive[i] > 0.0) return i + 1;
  }
  return predictive.size();
}

// CRP predictive of label k restricted to the last r labels. Classes absent
// from the window (including a brand-new class) take the whole new-table mass.
inline double run_predictive(const CrpState &state, std::size_t r, std::size_t k) {
  require(r <= state.t(), "run_predictive: run length exceeds history");
  require(k >= 1 && k <= state.num_classes() + 1, "run_predictive: class id out of range");
  if (r == 0) return 1.0;
  const std::size_t w = state.window_count(k, r);
  const double denom = static_cast<double>(r) + state.alpha();
  return w > 0 ? static_cast<double>(w) / denom : state.alpha() / denom;
}

inline double log_run_predictive(const CrpState &state, std::size_t r, std::size_t k) {
  if (r == 0) return 0.0;
  return std::log(run_predictive(state, r, k));
}

// True when labels are 1-based and numbered by first appearance.
inline bool is_canonical(std::span<const std::size_t> labels) {
  std::size_t max_seen = 0;
  for (std::size_t z : labels) {
    if (z < 1 || z > max_seen + 1) return false;
    max_seen = std::max(max_seen, z);
  }
  return true;
}

// Chain-rule probability of a canonical label sequence under the CRP.
inline double sequence_probability(std::span<const std::size_t> labels, double alpha) {
  require(is_canonical(labels), "sequence_probability: labels are not canonically numbered");
  CrpState state(alpha);
  double p = 1.0;
  for (std::size_t z : labels) {
    const std::vector<double> pred = global_predictive(state);
    p *= pred[z - 1];
    state.record(z);
  }
  return p;
}

} // namespace ihcpd
