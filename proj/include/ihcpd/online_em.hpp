#pragma once

// Gaussian emission classes learned online: E-step responsibilities, a
// single stochastic-gradient M-step per observation, per-class learning rates
// that decay only when the class wins the MAP assignment, and the candidate
// class proposed at every step.

#include "ihcpd/errors.hpp"
#include "ihcpd/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace ihcpd {

inline constexpr double kDefaultVarFloor = 1e-6;

struct LearningRates {
  double mu = 1.0;
  double var = 0.02;
};

struct EmissionParams {
  double mu = 0.0;
  double var = 1.0;
  double eta_mu = 1.0;
  double eta_var = 0.02;
  std::size_t born_at = 0;
};

struct CandidatePolicy {
  enum class MeanInit { AtObservation, Fixed };
  MeanInit mu_init = MeanInit::AtObservation;
  double mu0 = 0.0;
  double var_init = 1.0;
};

enum class VarianceUpdate { Natural, Log };

inline double emission_loglik(double x, const EmissionParams &p) {
  const double d = x - p.mu;
  return -0.5 * std::log(2.0 * std::numbers::pi * p.var) - d * d / (2.0 * p.var);
}

// Posterior class probabilities for x, computed in the log domain.
inline std::vector<double> e_step(double x, std::span<const double> class_prior,
                                  std::span<const EmissionParams> params) {
  require(!class_prior.empty(), "e_step: empty class prior");
  require(class_prior.size() == params.size(), "e_step: prior and parameter table differ in length");
  std::vector<double> log_post(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    log_post[k] = std::log(class_prior[k]) + emission_loglik(x, params[k]);
  }
  double top = numeric::kNegInf;
  for (double v : log_post) top = std::max(top, v);
  if (!std::isfinite(top)) throw DegenerateState("e_step: no class can explain the observation");
  double total = 0.0;
  for (double &v : log_post) {
    v = std::exp(v - top);
    total += v;
  }
  for (double &v : log_post) v /= total;
  return log_post;
}

struct EmissionGradient {
  double d_mu;
  double d_var;
};

// Gradient of gamma * log N(x; mu, var) with respect to (mu, var).
inline EmissionGradient emission_gradient(const EmissionParams &p, double x, double gamma) {
  const double d = x - p.mu;
  return {gamma * d / p.var, gamma * (d * d / (2.0 * p.var * p.var) - 1.0 / (2.0 * p.var))};
}

// One ascent step on the time-t term of the expected complete-data log-likelihood.
// Learning rates are not touched here.
inline EmissionParams m_step(const EmissionParams &p, double x, double gamma,
                             double var_floor = kDefaultVarFloor,
                             VarianceUpdate update = VarianceUpdate::Natural) {
  require(gamma >= 0.0 && gamma <= 1.0, "m_step: responsibility outside [0, 1]");
  EmissionParams out = p;
  if (gamma == 0.0) return out;
  const EmissionGradient g = emission_gradient(p, x, gamma);
  out.mu = p.mu + p.eta_mu * g.d_mu;
  if (update == VarianceUpdate::Natural) {
    out.var = p.var + p.eta_var * g.d_var;
  } else {
    // d/d(log var) = var * d/d(var)
    out.var = std::exp(std::log(p.var) + p.eta_var * p.var * g.d_var);
  }
  out.var = std::max(var_floor, out.var);
  return out;
}

// Shrinks both learning rates of the winning class (1-based id) by the factor (1 - decay).
inline std::vector<EmissionParams> decay_rates(std::vector<EmissionParams> params, std::size_t k_star,
                                               double decay) {
  require(k_star >= 1 && k_star <= params.size(), "decay_rates: class id out of range");
  require(decay > 0.0 && decay < 1.0, "decay_rates: decay must lie in (0, 1)");
  EmissionParams &winner = params[k_star - 1];
  winner.eta_mu *= 1.0 - decay;
  winner.eta_var *= 1.0 - decay;
  return params;
}

inline EmissionParams spawn_candidate(double x, const CandidatePolicy &policy, LearningRates eta_init,
                                      double var_floor = kDefaultVarFloor, std::size_t born_at = 0) {
  EmissionParams p;
  p.mu = policy.mu_init == CandidatePolicy::MeanInit::AtObservation ? x : policy.mu0;
  p.var = std::max(var_floor, policy.var_init);
  p.eta_mu = eta_init.mu;
  p.eta_var = eta_init.var;
  p.born_at = born_at;
  return p;
}

// 1-based id of the most responsible class; ties favour the lowest id.
inline std::size_t map_assignment(std::span<const double> responsibilities) {
  require(!responsibilities.empty(), "map_assignment: empty responsibilities");
  return numeric::argmax_first(responsibilities) + 1;
}

} // namespace ihcpd
