#pragma once

// Run-length trellis for Bayesian online change-point detection.
//
// Hypothesis r_t = j says the current run holds the last j observations. Each
// step every live hypothesis either grows (r -> r + 1, paying the run
// predictive of the newest datum) or collapses into the newborn r = 0
// hypothesis (paying the empty-window predictive). Weights are kept in the log
// domain and re-centred after every step; the removed normaliser is folded
// into the evidence accumulator so that joint weights stay recoverable.

#include "ihcpd/errors.hpp"
#include "ihcpd/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace ihcpd {

class HazardConfig {
public:
  // Expected run length. The hazard (probability of a change per step) is 1/lambda.
  explicit HazardConfig(double lambda = 1e6) : lambda_(lambda) {
    if (!(std::isfinite(lambda) && lambda >= 1.0)) {
      throw ConfigError("hazard lambda must be finite and >= 1");
    }
  }

  double lambda() const { return lambda_; }
  double rate() const { return 1.0 / lambda_; }
  double log_reset() const { return -std::log(lambda_); }
  double log_growth() const {
    return lambda_ == 1.0 ? numeric::kNegInf : std::log1p(-1.0 / lambda_);
  }

private:
  double lambda_;
};

struct HazardPrior {
  double p_growth;
  double p_reset;
};

// Constant hazard: the conditional prior does not depend on the previous run length.
inline HazardPrior hazard_prior(std::size_t /*r_prev*/, const HazardConfig &cfg) {
  const double h = cfg.rate();
  return {1.0 - h, h};
}

struct RunLengthState {
  // Live hypotheses in ascending run-length order. Dense ({0..t}) unless pruned.
  std::vector<std::size_t> run_lengths{0};
  // Log posterior weight of each hypothesis; joint weight = log_weights[i] + evidence_log.
  std::vector<double> log_weights{0.0};
  std::size_t t = 0;
  // log p(z*_{1:t}) accumulated across steps.
  double evidence_log = 0.0;

  std::size_t size() const { return run_lengths.size(); }

  double joint_log(std::size_t i) const { return log_weights[i] + evidence_log; }
};

struct RunLengthMass {
  std::size_t r;
  double mass;
};

using SparsePosterior = std::vector<RunLengthMass>;

// Advances the trellis by one observation.
//
// log_psi[i] is the log predictive of the new datum under hypothesis
// run_lengths[i]; log_psi_reset is the empty-window predictive paid by the
// newborn r = 0 hypothesis (0, i.e. probability 1, for the CRP label model).
inline RunLengthState recursion_step(const RunLengthState &state, std::span<const double> log_psi,
                                     const HazardConfig &cfg, double log_psi_reset = 0.0) {
  require(log_psi.size() == state.size(), "recursion_step: psi length does not match live hypotheses");
  require(state.run_lengths.size() == state.log_weights.size(), "recursion_step: malformed state");
  require(!std::isnan(log_psi_reset), "recursion_step: NaN reset predictive");

  const double log_growth = cfg.log_growth();
  const double log_reset = cfg.log_reset();

  RunLengthState next;
  next.t = state.t + 1;
  next.run_lengths.resize(state.size() + 1);
  next.log_weights.resize(state.size() + 1);

  next.run_lengths[0] = 0;
  next.log_weights[0] = log_reset + log_psi_reset + numeric::log_sum_exp(state.log_weights);
  for (std::size_t i = 0; i < state.size(); ++i) {
    require(!std::isnan(log_psi[i]), "recursion_step: NaN predictive");
    next.run_lengths[i + 1] = state.run_lengths[i] + 1;
    next.log_weights[i + 1] = log_growth + log_psi[i] + state.log_weights[i];
  }

  const double norm = numeric::log_sum_exp(next.log_weights);
  if (!std::isfinite(norm)) {
    throw DegenerateState("run-length trellis has no finite positive weight");
  }
  for (double &w : next.log_weights) w -= norm;
  next.evidence_log = state.evidence_log + norm;
  return next;
}

// p(r_t | z*_{1:t}) aligned with state.run_lengths. The state is left untouched.
inline std::vector<double> normalize_posterior(const RunLengthState &state) {
  // Shift by the maximum and divide, rather than subtracting a log normaliser:
  // for large |log weight| the subtraction would cost digits.
  double top = numeric::kNegInf;
  for (double v : state.log_weights) top = std::max(top, v);
  if (!std::isfinite(top)) throw DegenerateState("normalize_posterior: no positive weight");
  std::vector<double> posterior(state.size());
  double total = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    posterior[i] = std::exp(state.log_weights[i] - top);
    total += posterior[i];
  }
  for (double &p : posterior) p /= total;
  return posterior;
}

// Position of the most probable hypothesis; ties go to the smallest run length.
inline std::size_t map_index(std::span<const double> posterior) {
  require(!posterior.empty(), "map_runlength: empty posterior");
  return numeric::argmax_first(posterior);
}

// MAP run length of a dense posterior (index == run length).
inline std::size_t map_runlength(std::span<const double> posterior) { return map_index(posterior); }

inline std::size_t map_runlength(const RunLengthState &state, std::span<const double> posterior) {
  return state.run_lengths[map_index(posterior)];
}

struct PrunePolicy {
  enum class Kind { None, Threshold, TopM };
  Kind kind = Kind::None;
  double epsilon = 0.0;
  std::size_t top_m = 0;

  static PrunePolicy none() { return {}; }
  static PrunePolicy threshold(double eps) { return {Kind::Threshold, eps, 0}; }
  static PrunePolicy top(std::size_t m) { return {Kind::TopM, 0.0, m}; }
};

// Drops low-mass hypotheses and rescales survivors so the joint total is preserved.
// The r = 0 hypothesis always survives.
inline RunLengthState prune(const RunLengthState &state, const PrunePolicy &policy) {
  if (policy.kind == PrunePolicy::Kind::None) return state;
  if (policy.kind == PrunePolicy::Kind::Threshold) {
    require(policy.epsilon >= 0.0 && policy.epsilon < 1.0, "prune: threshold must lie in [0, 1)");
    if (policy.epsilon == 0.0) return state;
  } else {
    require(policy.top_m >= 1, "prune: top-M policy would remove every hypothesis");
  }

  const std::vector<double> posterior = normalize_posterior(state);
  std::vector<bool> keep(state.size(), false);
  if (policy.kind == PrunePolicy::Kind::Threshold) {
    for (std::size_t i = 0; i < state.size(); ++i) keep[i] = posterior[i] >= policy.epsilon;
  } else {
    std::vector<std::size_t> order(state.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t m = std::min(policy.top_m, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return posterior[a] != posterior[b] ? posterior[a] > posterior[b] : a < b;
                      });
    for (std::size_t i = 0; i < m; ++i) keep[order[i]] = true;
  }
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state.run_lengths[i] == 0) keep[i] = true;
  }

  RunLengthState out;
  out.t = state.t;
  out.run_lengths.clear();
  out.log_weights.clear();
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!keep[i]) continue;
    out.run_lengths.push_back(state.run_lengths[i]);
    out.log_weights.push_back(state.log_weights[i]);
  }
  require(!out.run_lengths.empty(), "prune: policy removed every hypothesis");
  const double norm = numeric::log_sum_exp(out.log_weights);
  if (!std::isfinite(norm)) throw DegenerateState("prune: survivors carry no mass");
  for (double &w : out.log_weights) w -= norm;
  out.evidence_log = state.evidence_log;
  return out;
}

struct ChangePointRule {
  enum class Mode { MapDrop, MassNearZero };
  Mode mode = Mode::MapDrop;
  // MapDrop: change at t when r*_t < drop_fraction * r*_{t-1}.
  double drop_fraction = 0.5;
  // MassNearZero: change at t when P(r_t <= mass_window) first reaches mass_threshold.
  std::size_t mass_window = 0;
  double mass_threshold = 0.5;

  void validate() const {
    if (!(drop_fraction > 0.0 && drop_fraction <= 1.0)) {
      throw ConfigError("drop_fraction must lie in (0, 1]");
    }
    if (!(mass_threshold > 0.0 && mass_threshold < 1.0)) {
      throw ConfigError("mass_threshold must lie in (0, 1)");
    }
  }
};

// Positions (0-based, into the trace) at which a change point is declared.
//
// In mass-near-zero mode only the rising edge is reported: consecutive steps
// above the threshold belong to the same change.
inline std::vector<std::size_t> detect_changepoints(std::span<const std::size_t> r_star,
                                                    const ChangePointRule &rule,
                                                    std::span<const SparsePosterior> posteriors = {}) {
  require(!r_star.empty(), "detect_changepoints: empty trace");
  rule.validate();
  std::vector<std::size_t> cps;
  if (rule.mode == ChangePointRule::Mode::MapDrop) {
    for (std::size_t i = 1; i < r_star.size(); ++i) {
      if (static_cast<double>(r_star[i]) < rule.drop_fraction * static_cast<double>(r_star[i - 1])) {
        cps.push_back(i);
      }
    }
    return cps;
  }

  require(posteriors.size() == r_star.size(),
          "detect_changepoints: mass-near-zero mode needs one posterior per step");
  bool above = true;
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    double near_zero = 0.0;
    for (const auto &entry : posteriors[i]) {
      if (entry.r <= rule.mass_window) near_zero += entry.mass;
    }
    const bool now_above = near_zero >= rule.mass_threshold;
    // Start-up steps (t <= mass_window) are trivially above and never open a change.
    if (now_above && !above) cps.push_back(i);
    above = now_above;
  }
  return cps;
}

} // namespace ihcpd
