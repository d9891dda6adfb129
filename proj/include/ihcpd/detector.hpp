#pragma once

// End-to-end streaming detector. Three modes share the trellis code path and
// differ only in the run predictive fed to it:
//
//   infinite  CRP latent classes, spawned on demand, learned by online EM
//   fixed-k   K latent classes with a symmetric Dirichlet prior on the class weights
//   baseline  plain BOCPD on the raw observations with a Normal-Inverse-Gamma prior

#include "ihcpd/crp.hpp"
#include "ihcpd/errors.hpp"
#include "ihcpd/numeric.hpp"
#include "ihcpd/online_em.hpp"
#include "ihcpd/runlength.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ihcpd {

enum class Mode { Infinite, FixedK, Baseline };

inline std::string_view to_string(Mode mode) {
  switch (mode) {
  case Mode::Infinite: return "infinite";
  case Mode::FixedK: return "fixed-k";
  case Mode::Baseline: return "baseline";
  }
  return "unknown";
}

struct NigPrior {
  double mu0 = 0.0;
  double kappa0 = 1.0;
  double a0 = 1.0;
  double b0 = 1.0;

  void validate() const {
    if (!std::isfinite(mu0)) throw ConfigError("baseline prior mu0 must be finite");
    if (!(kappa0 > 0.0 && a0 > 0.0 && b0 > 0.0) || !std::isfinite(kappa0) || !std::isfinite(a0) ||
        !std::isfinite(b0)) {
      throw ConfigError("baseline prior kappa0, a0, b0 must be positive and finite");
    }
  }
};

struct DetectorConfig {
  Mode mode = Mode::Infinite;
  double alpha = 1.0;
  std::size_t k_fixed = 10;
  double dirichlet_beta = 1.0;
  HazardConfig hazard{1e6};
  CandidatePolicy candidate;
  LearningRates eta_init;
  double decay = 0.02;
  double var_floor = kDefaultVarFloor;
  VarianceUpdate var_update = VarianceUpdate::Natural;
  PrunePolicy prune;
  ChangePointRule cp_rule;
  NigPrior baseline_prior;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(std::isfinite(alpha) && alpha > 0.0)) throw ConfigError("alpha must be positive");
    if (k_fixed < 1) throw ConfigError("k must be at least 1");
    if (!(std::isfinite(dirichlet_beta) && dirichlet_beta > 0.0)) throw ConfigError("beta must be positive");
    if (!(eta_init.mu > 0.0 && eta_init.var > 0.0)) throw ConfigError("learning rates must be positive");
    if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("decay must lie in (0, 1)");
    if (!(std::isfinite(var_floor) && var_floor > 0.0)) throw ConfigError("var_floor must be positive");
    if (!(candidate.var_init > 0.0) || !std::isfinite(candidate.var_init)) {
      throw ConfigError("candidate variance must be positive");
    }
    if (prune.kind == PrunePolicy::Kind::Threshold && !(prune.epsilon >= 0.0 && prune.epsilon < 1.0)) {
      throw ConfigError("prune threshold must lie in [0, 1)");
    }
    if (prune.kind == PrunePolicy::Kind::TopM && prune.top_m < 1) throw ConfigError("prune top-M needs M >= 1");
    cp_rule.validate();
    baseline_prior.validate();
  }
};

struct StepOutput {
  std::size_t t = 0;
  std::size_t z_star = 0;
  std::size_t k_t = 0;
  std::size_t r_star = 0;
  std::vector<double> responsibilities;
  SparsePosterior rl_posterior;
  bool cp_flag = false;
  // Draw from the class prior made at the top of every step; it does not gate anything.
  std::size_t sampled_class = 0;
};

// Dirichlet-categorical posterior predictive of class k under a window of r labels.
inline double fixed_k_run_predictive(std::size_t window_count_k, std::size_t r, std::size_t k,
                                     std::size_t k_fixed, double beta) {
  require(k >= 1 && k <= k_fixed, "fixed_k_run_predictive: class id out of range");
  require(window_count_k <= r, "fixed_k_run_predictive: window count exceeds run length");
  return (static_cast<double>(window_count_k) + beta) /
         (static_cast<double>(r) + static_cast<double>(k_fixed) * beta);
}

struct WindowStats {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0; // sum of squared deviations from the mean
};

// Student-t posterior predictive of x after a conjugate update on the window.
inline double baseline_log_predictive(double x, const WindowStats &w, const NigPrior &prior) {
  prior.validate();
  require(w.m2 >= 0.0, "baseline_predictive: negative scatter");
  const double n = static_cast<double>(w.n);
  const double kappa = prior.kappa0 + n;
  const double mu = (prior.kappa0 * prior.mu0 + n * w.mean) / kappa;
  const double a = prior.a0 + 0.5 * n;
  const double dev = w.mean - prior.mu0;
  const double b = prior.b0 + 0.5 * w.m2 + (w.n == 0 ? 0.0 : prior.kappa0 * n * dev * dev / (2.0 * kappa));

  const double nu = 2.0 * a;
  const double scale_sq = b * (kappa + 1.0) / (a * kappa);
  const double z = (x - mu) * (x - mu) / scale_sq;
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi * scale_sq) -
         0.5 * (nu + 1.0) * std::log1p(z / nu);
}

inline double baseline_predictive(double x, const WindowStats &w, const NigPrior &prior) {
  return std::exp(baseline_log_predictive(x, w, prior));
}

class Detector {
public:
  explicit Detector(DetectorConfig cfg) : cfg_(std::move(cfg)), crp_(1.0), rng_(0) {
    cfg_.validate();
    crp_ = CrpState(cfg_.mode == Mode::FixedK ? cfg_.dirichlet_beta : cfg_.alpha);
    rng_.seed(cfg_.seed);
  }

  const DetectorConfig &config() const { return cfg_; }
  const RunLengthState &trellis() const { return trellis_; }
  const CrpState &crp() const { return crp_; }
  const std::vector<EmissionParams> &classes() const { return classes_; }
  std::size_t num_classes() const { return cfg_.mode == Mode::Baseline ? 1 : classes_.size(); }
  std::size_t t() const { return trellis_.t; }

  StepOutput step(double x) {
    if (!std::isfinite(x)) throw InputError("observation at t=" + std::to_string(t() + 1) + " is not finite");
    StepOutput out;
    std::size_t z = 1;
    std::vector<double> log_psi(trellis_.size());
    double log_psi_reset = 0.0;

    switch (cfg_.mode) {
    case Mode::Infinite: {
      z = assign_infinite(x, out);
      for (std::size_t i = 0; i < trellis_.size(); ++i) {
        log_psi[i] = log_run_predictive(crp_, trellis_.run_lengths[i], z);
      }
      break;
    }
    case Mode::FixedK: {
      z = assign_fixed_k(x, out);
      for (std::size_t i = 0; i < trellis_.size(); ++i) {
        const std::size_t r = trellis_.run_lengths[i];
        log_psi[i] =
            std::log(fixed_k_run_predictive(crp_.window_count(z, r), r, z, cfg_.k_fixed, cfg_.dirichlet_beta));
      }
      log_psi_reset = -std::log(static_cast<double>(cfg_.k_fixed));
      break;
    }
    case Mode::Baseline: {
      out.responsibilities = {1.0};
      for (std::size_t i = 0; i < trellis_.size(); ++i) {
        log_psi[i] = baseline_log_predictive(x, window_stats(trellis_.run_lengths[i]), cfg_.baseline_prior);
      }
      log_psi_reset = baseline_log_predictive(x, WindowStats{}, cfg_.baseline_prior);
      break;
    }
    }

    trellis_ = prune(recursion_step(trellis_, log_psi, cfg_.hazard, log_psi_reset), cfg_.prune);
    const std::vector<double> posterior = normalize_posterior(trellis_);
    const std::size_t r_star = map_runlength(trellis_, posterior);

    if (cfg_.mode == Mode::Baseline) {
      record_observation(x);
    } else {
      crp_.record(z);
    }

    out.t = trellis_.t;
    out.z_star = z;
    out.k_t = num_classes();
    out.r_star = r_star;
    out.rl_posterior.reserve(posterior.size());
    for (std::size_t i = 0; i < posterior.size(); ++i) {
      out.rl_posterior.push_back({trellis_.run_lengths[i], posterior[i]});
    }
    out.cp_flag = update_cp_flag(r_star, out.rl_posterior);
    return out;
  }

private:
  // CRP prior, candidate always on the table; the candidate survives only if it wins the MAP.
  std::size_t assign_infinite(double x, StepOutput &out) {
    const std::size_t k_prev = classes_.size();
    const EmissionParams candidate =
        spawn_candidate(x, cfg_.candidate, cfg_.eta_init, cfg_.var_floor, t() + 1);
    const std::vector<double> prior = global_predictive(crp_);
    out.sampled_class = sample_class(prior, rng_);

    std::vector<EmissionParams> table = classes_;
    table.push_back(candidate);
    const std::vector<double> gamma = e_step(x, prior, table);
    for (std::size_t k = 0; k < table.size(); ++k) {
      table[k] = m_step(table[k], x, gamma[k], cfg_.var_floor, cfg_.var_update);
    }
    out.responsibilities = e_step(x, prior, table);
    const std::size_t z = map_assignment(out.responsibilities);
    if (z != k_prev + 1) table.pop_back();
    classes_ = decay_rates(std::move(table), z, cfg_.decay);
    return z;
  }

  // K slots with a symmetric Dirichlet prior. Slots that have never won are
  // re-seeded at the observation each step; the lowest one is next in line.
  std::size_t assign_fixed_k(double x, StepOutput &out) {
    const std::size_t k_used = classes_.size();
    const double denom = static_cast<double>(crp_.t()) + static_cast<double>(cfg_.k_fixed) * cfg_.dirichlet_beta;
    std::vector<double> prior(cfg_.k_fixed);
    for (std::size_t k = 1; k <= cfg_.k_fixed; ++k) {
      const double count = k <= crp_.num_classes() ? static_cast<double>(crp_.count(k)) : 0.0;
      prior[k - 1] = (count + cfg_.dirichlet_beta) / denom;
    }
    out.sampled_class = sample_class(prior, rng_);

    std::vector<EmissionParams> table = classes_;
    while (table.size() < cfg_.k_fixed) {
      table.push_back(spawn_candidate(x, cfg_.candidate, cfg_.eta_init, cfg_.var_floor, t() + 1));
    }
    const std::vector<double> gamma = e_step(x, prior, table);
    for (std::size_t k = 0; k < table.size(); ++k) {
      table[k] = m_step(table[k], x, gamma[k], cfg_.var_floor, cfg_.var_update);
    }
    out.responsibilities = e_step(x, prior, table);
    const std::size_t z = map_assignment(out.responsibilities);
    table.resize(std::max(k_used, z));
    classes_ = decay_rates(std::move(table), z, cfg_.decay);
    return z;
  }

  void record_observation(double x) {
    if (shifted_sum_.empty()) {
      shift_ = x;
      shifted_sum_.push_back(0.0);
      shifted_sq_.push_back(0.0);
    }
    const double d = x - shift_;
    shifted_sum_.push_back(shifted_sum_.back() + d);
    shifted_sq_.push_back(shifted_sq_.back() + d * d);
  }

  // Statistics of the last r observations. Sums are kept relative to the first
  // observation to limit cancellation in the scatter.
  WindowStats window_stats(std::size_t r) const {
    WindowStats w;
    w.n = r;
    if (r == 0) return w;
    const std::size_t end = shifted_sum_.size() - 1;
    const double s1 = shifted_sum_[end] - shifted_sum_[end - r];
    const double s2 = shifted_sq_[end] - shifted_sq_[end - r];
    const double n = static_cast<double>(r);
    w.mean = shift_ + s1 / n;
    w.m2 = std::max(0.0, s2 - s1 * s1 / n);
    return w;
  }

  bool update_cp_flag(std::size_t r_star, const SparsePosterior &posterior) {
    bool flag = false;
    if (cfg_.cp_rule.mode == ChangePointRule::Mode::MapDrop) {
      flag = has_prev_ &&
             static_cast<double>(r_star) < cfg_.cp_rule.drop_fraction * static_cast<double>(prev_r_star_);
    } else {
      double near_zero = 0.0;
      for (const auto &entry : posterior) {
        if (entry.r <= cfg_.cp_rule.mass_window) near_zero += entry.mass;
      }
      const bool now_above = near_zero >= cfg_.cp_rule.mass_threshold;
      flag = now_above && !above_;
      above_ = now_above;
    }
    prev_r_star_ = r_star;
    has_prev_ = true;
    return flag;
  }

  DetectorConfig cfg_;
  RunLengthState trellis_;
  CrpState crp_;
  std::vector<EmissionParams> classes_;
  Rng rng_;
  std::size_t prev_r_star_ = 0;
  bool has_prev_ = false;
  bool above_ = true;
  double shift_ = 0.0;
  std::vector<double> shifted_sum_;
  std::vector<double> shifted_sq_;
};

struct RunOptions {
  bool keep_posterior = true;
  // Posterior entries below this mass are not stored in the trace.
  double posterior_floor = 0.0;
};

struct RunResult {
  std::vector<StepOutput> steps;
  // 1-based step indices t at which a change point was declared.
  std::vector<std::size_t> changepoints;
  std::size_t final_k = 0;
  std::vector<EmissionParams> classes;
  double evidence_log = 0.0;
};

inline RunResult run(std::span<const double> series, const DetectorConfig &cfg, const RunOptions &options = {}) {
  if (series.empty()) throw InputError("run: empty series");
  Detector detector(cfg);
  RunResult result;
  result.steps.reserve(series.size());
  std::vector<std::size_t> r_star;
  std::vector<SparsePosterior> posteriors;
  r_star.reserve(series.size());
  const bool need_posteriors = cfg.cp_rule.mode == ChangePointRule::Mode::MassNearZero;

  for (double x : series) {
    StepOutput out = detector.step(x);
    r_star.push_back(out.r_star);
    if (need_posteriors) posteriors.push_back(out.rl_posterior);
    if (!options.keep_posterior) {
      out.rl_posterior.clear();
      out.rl_posterior.shrink_to_fit();
    } else if (options.posterior_floor > 0.0) {
      std::erase_if(out.rl_posterior, [&](const RunLengthMass &m) { return m.mass < options.posterior_floor; });
    }
    result.steps.push_back(std::move(out));
  }

  for (std::size_t i : detect_changepoints(r_star, cfg.cp_rule, posteriors)) {
    result.changepoints.push_back(i + 1);
  }
  result.final_k = detector.num_classes();
  result.classes = detector.classes();
  result.evidence_log = detector.trellis().evidence_log;
  return result;
}

} // namespace ihcpd
