#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include "ihcpd/crp.hpp"
#include "ihcpd/runlength.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace ihcpd::testing {

// log p(r_T, z*_{1:T}) for r_T = 0..T from the production trellis, driven by
// CRP run predictives on a fixed label sequence.
inline std::vector<double> trellis_joint(std::span<const std::size_t> labels, double alpha, double lambda) {
  const HazardConfig cfg(lambda);
  CrpState crp(alpha);
  RunLengthState state;
  for (std::size_t z : labels) {
    std::vector<double> log_psi(state.size());
    for (std::size_t i = 0; i < state.size(); ++i) log_psi[i] = log_run_predictive(crp, state.run_lengths[i], z);
    state = recursion_step(state, log_psi, cfg);
    crp.record(z);
  }
  std::vector<double> out(labels.size() + 1, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < state.size(); ++i) out[state.run_lengths[i]] = state.joint_log(i);
  return out;
}

// Uniformly random canonical label sequence (each step picks an existing class or a new one).
inline std::vector<std::size_t> random_canonical_labels(std::size_t n, std::mt19937_64 &rng) {
  std::vector<std::size_t> labels;
  std::size_t max_seen = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t z = 1 + static_cast<std::size_t>(rng() % (max_seen + 1));
    labels.push_back(z);
    max_seen = std::max(max_seen, z);
  }
  return labels;
}

inline double relative_error(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

} // namespace ihcpd::testing
