#pragma once

// Run configuration: compiled-in defaults, overridden by an optional
// key=value file, overridden by command-line flags. The run manifest uses the
// same key=value format, so a manifest can be fed back in as a config file.

#include "ihcpd/cli/io.hpp"
#include "ihcpd/detector.hpp"
#include "ihcpd/errors.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

namespace ihcpd::cli {

inline constexpr const char *kToolVersion = "0.1.0";

using KeyValues = std::map<std::string, std::string>;

struct RunSettings {
  DetectorConfig detector;
  std::filesystem::path input;
  std::filesystem::path out = "out";
  bool svg = false;
};

// Keys recorded in manifests for provenance only. Accepted and ignored on input.
inline const std::set<std::string> &informational_keys() {
  static const std::set<std::string> keys{"tool_version", "wall_clock_seconds"};
  return keys;
}

inline const std::set<std::string> &config_keys() {
  static const std::set<std::string> keys{
      "input",     "out",           "svg",           "mode",          "alpha",          "lambda",
      "k",         "beta",          "eta_mu",        "eta_sigma",     "decay",          "var_floor",
      "var_update", "candidate_mu", "candidate_mu0", "candidate_var", "prune",          "prune_top",
      "cp_rule",   "drop_fraction", "mass_window",   "mass_threshold", "mu0",           "kappa0",
      "a0",        "b0",            "seed"};
  return keys;
}

inline std::string normalise_key(std::string key) {
  for (char &c : key) {
    if (c == '-') c = '_';
  }
  return key;
}

inline KeyValues read_key_values(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  KeyValues kv;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(row) + ": expected key=value");
    }
    kv[normalise_key(std::string(trim(body.substr(0, eq))))] = std::string(trim(body.substr(eq + 1)));
  }
  return kv;
}

namespace detail {

inline double to_double(const std::string &key, const std::string &value) {
  double v = 0.0;
  if (!parse_double(value, v)) throw ConfigError(key + ": expected a number, got '" + value + "'");
  return v;
}

inline std::uint64_t to_unsigned(const std::string &key, const std::string &value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  }
  return v;
}

inline bool to_bool(const std::string &key, const std::string &value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + value + "'");
}

inline Mode to_mode(const std::string &value) {
  if (value == "infinite") return Mode::Infinite;
  if (value == "fixed-k" || value == "fixed_k") return Mode::FixedK;
  if (value == "baseline") return Mode::Baseline;
  throw ConfigError("mode: expected infinite, fixed-k or baseline, got '" + value + "'");
}

} // namespace detail

inline void apply(RunSettings &s, const std::string &key, const std::string &value) {
  using namespace detail;
  DetectorConfig &c = s.detector;
  if (key == "input") s.input = value;
  else if (key == "out") s.out = value;
  else if (key == "svg") s.svg = to_bool(key, value);
  else if (key == "mode") c.mode = to_mode(value);
  else if (key == "alpha") c.alpha = to_double(key, value);
  else if (key == "lambda") c.hazard = HazardConfig(to_double(key, value));
  else if (key == "k") c.k_fixed = static_cast<std::size_t>(to_unsigned(key, value));
  else if (key == "beta") c.dirichlet_beta = to_double(key, value);
  else if (key == "eta_mu") c.eta_init.mu = to_double(key, value);
  else if (key == "eta_sigma") c.eta_init.var = to_double(key, value);
  else if (key == "decay") c.decay = to_double(key, value);
  else if (key == "var_floor") c.var_floor = to_double(key, value);
  else if (key == "var_update") {
    if (value == "natural") c.var_update = VarianceUpdate::Natural;
    else if (value == "log") c.var_update = VarianceUpdate::Log;
    else throw ConfigError("var_update: expected natural or log, got '" + value + "'");
  } else if (key == "candidate_mu") {
    if (value == "at-observation") c.candidate.mu_init = CandidatePolicy::MeanInit::AtObservation;
    else if (value == "fixed") c.candidate.mu_init = CandidatePolicy::MeanInit::Fixed;
    else throw ConfigError("candidate_mu: expected at-observation or fixed, got '" + value + "'");
  } else if (key == "candidate_mu0") c.candidate.mu0 = to_double(key, value);
  else if (key == "candidate_var") c.candidate.var_init = to_double(key, value);
  else if (key == "prune") {
    const double eps = to_double(key, value);
    c.prune = eps == 0.0 ? PrunePolicy::none() : PrunePolicy::threshold(eps);
  } else if (key == "prune_top") {
    const auto m = static_cast<std::size_t>(to_unsigned(key, value));
    if (m > 0) c.prune = PrunePolicy::top(m);
  } else if (key == "cp_rule") {
    if (value == "map-drop") c.cp_rule.mode = ChangePointRule::Mode::MapDrop;
    else if (value == "mass-near-zero") c.cp_rule.mode = ChangePointRule::Mode::MassNearZero;
    else throw ConfigError("cp_rule: expected map-drop or mass-near-zero, got '" + value + "'");
  } else if (key == "drop_fraction") c.cp_rule.drop_fraction = to_double(key, value);
  else if (key == "mass_window") c.cp_rule.mass_window = static_cast<std::size_t>(to_unsigned(key, value));
  else if (key == "mass_threshold") c.cp_rule.mass_threshold = to_double(key, value);
  else if (key == "mu0") c.baseline_prior.mu0 = to_double(key, value);
  else if (key == "kappa0") c.baseline_prior.kappa0 = to_double(key, value);
  else if (key == "a0") c.baseline_prior.a0 = to_double(key, value);
  else if (key == "b0") c.baseline_prior.b0 = to_double(key, value);
  else if (key == "seed") c.seed = to_unsigned(key, value);
  else throw ConfigError("unknown configuration key '" + key + "'");
}

// Defaults, then the file, then the flags. The result is validated.
inline RunSettings parse_config(const KeyValues &flags, const std::optional<std::filesystem::path> &file = {}) {
  RunSettings settings;
  // The command line sets a pruning default that a config file or flag may override.
  settings.detector.prune = PrunePolicy::threshold(1e-10);

  auto apply_all = [&](const KeyValues &kv) {
    // prune_top after prune so an explicit top-M wins over a threshold in the same source
    for (const auto &[raw_key, value] : kv) {
      const std::string key = normalise_key(raw_key);
      if (informational_keys().contains(key) || key == "prune_top") continue;
      if (!config_keys().contains(key)) throw ConfigError("unknown configuration key '" + key + "'");
      apply(settings, key, value);
    }
    if (auto it = kv.find("prune_top"); it != kv.end()) apply(settings, "prune_top", it->second);
  };
  if (file) apply_all(read_key_values(*file));
  apply_all(flags);
  settings.detector.validate();
  return settings;
}

inline std::string prune_value(const PrunePolicy &p) {
  return p.kind == PrunePolicy::Kind::Threshold ? format_double(p.epsilon) : "0";
}

// Complete key=value snapshot. Every config key is present, so the manifest alone reproduces the run.
inline std::string render_manifest(const RunSettings &s, double wall_clock_seconds) {
  const DetectorConfig &c = s.detector;
  std::ostringstream m;
  m << "tool_version=" << kToolVersion << '\n';
  m << "input=" << s.input.string() << '\n';
  m << "out=" << s.out.string() << '\n';
  m << "svg=" << (s.svg ? "true" : "false") << '\n';
  m << "mode=" << to_string(c.mode) << '\n';
  m << "seed=" << c.seed << '\n';
  m << "alpha=" << format_double(c.alpha) << '\n';
  m << "lambda=" << format_double(c.hazard.lambda()) << '\n';
  m << "k=" << c.k_fixed << '\n';
  m << "beta=" << format_double(c.dirichlet_beta) << '\n';
  m << "eta_mu=" << format_double(c.eta_init.mu) << '\n';
  m << "eta_sigma=" << format_double(c.eta_init.var) << '\n';
  m << "decay=" << format_double(c.decay) << '\n';
  m << "var_floor=" << format_double(c.var_floor) << '\n';
  m << "var_update=" << (c.var_update == VarianceUpdate::Natural ? "natural" : "log") << '\n';
  m << "candidate_mu="
    << (c.candidate.mu_init == CandidatePolicy::MeanInit::AtObservation ? "at-observation" : "fixed") << '\n';
  m << "candidate_mu0=" << format_double(c.candidate.mu0) << '\n';
  m << "candidate_var=" << format_double(c.candidate.var_init) << '\n';
  m << "prune=" << prune_value(c.prune) << '\n';
  m << "prune_top=" << (c.prune.kind == PrunePolicy::Kind::TopM ? c.prune.top_m : 0) << '\n';
  m << "cp_rule=" << (c.cp_rule.mode == ChangePointRule::Mode::MapDrop ? "map-drop" : "mass-near-zero") << '\n';
  m << "drop_fraction=" << format_double(c.cp_rule.drop_fraction) << '\n';
  m << "mass_window=" << c.cp_rule.mass_window << '\n';
  m << "mass_threshold=" << format_double(c.cp_rule.mass_threshold) << '\n';
  m << "mu0=" << format_double(c.baseline_prior.mu0) << '\n';
  m << "kappa0=" << format_double(c.baseline_prior.kappa0) << '\n';
  m << "a0=" << format_double(c.baseline_prior.a0) << '\n';
  m << "b0=" << format_double(c.baseline_prior.b0) << '\n';
  m << "wall_clock_seconds=" << format_double(wall_clock_seconds) << '\n';
  return m.str();
}

} // namespace ihcpd::cli
