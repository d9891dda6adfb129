// Command-line front end: run a detector over a CSV series, generate
// synthetic data, and score detections against ground truth.

#include "ihcpd/cli/config.hpp"
#include "ihcpd/cli/io.hpp"
#include "ihcpd/cli/score.hpp"
#include "ihcpd/cli/svg.hpp"
#include "ihcpd/cli/synth.hpp"
#include "ihcpd/detector.hpp"
#include "ihcpd/oracle_sim.hpp"

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

enum ExitCode { kOk = 0, kInputError = 1, kConfigError = 2, kInternalError = 3 };

int cmd_run(const ihcpd::cli::KeyValues &flags, const std::optional<std::filesystem::path> &config_file) {
  using namespace ihcpd;
  cli::RunSettings settings = cli::parse_config(flags, config_file);
  if (settings.input.empty()) throw ConfigError("run: --input is required");

  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> series = cli::ingest_csv(settings.input);
  RunOptions options;
  options.posterior_floor = cli::kPosteriorFloor;
  const RunResult result = run(series, settings.detector, options);
  cli::emit_traces(series, result, settings.out);
  if (settings.svg) cli::render_svg(series, result, settings.out);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  cli::write_file(settings.out / "manifest", cli::render_manifest(settings, seconds));

  std::cout << "steps=" << result.steps.size() << '\n'
            << "final_k=" << result.final_k << '\n'
            << "changepoints=" << result.changepoints.size() << '\n'
            << "out=" << settings.out.string() << '\n';
  return kOk;
}

int cmd_synth(const std::string &segments, std::uint64_t seed, const std::filesystem::path &out,
              std::filesystem::path truth) {
  using namespace ihcpd;
  const auto specs = cli::parse_segments(segments);
  const oracle::SyntheticSeries data = oracle::gen_piecewise_gaussian(specs, seed);
  cli::write_series_csv(out, data.series);
  if (truth.empty()) truth = out.string() + ".truth.csv";
  // Truth is written as 1-based step indices of the first sample of each new segment.
  std::vector<std::size_t> steps;
  for (std::size_t cp : data.true_cps) steps.push_back(cp + 1);
  cli::write_indices_csv(truth, steps);
  std::cout << "samples=" << data.series.size() << '\n' << "truth=" << truth.string() << '\n';
  return kOk;
}

int cmd_score(const std::filesystem::path &pred, const std::filesystem::path &truth, std::size_t tolerance) {
  using namespace ihcpd;
  const auto p = cli::ingest_indices(pred);
  const auto t = cli::ingest_indices(truth);
  const cli::DetectionScore s = cli::score_detections(p, t, tolerance);
  std::cout << "predicted=" << s.predicted << '\n'
            << "actual=" << s.actual << '\n'
            << "true_positives=" << s.true_positives << '\n'
            << "precision=" << cli::format_double(s.precision) << '\n'
            << "recall=" << cli::format_double(s.recall) << '\n'
            << "f1=" << cli::format_double(s.f1) << '\n'
            << "mean_delay=" << cli::format_double(s.mean_delay) << '\n';
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Streaming change-point detection over latent classes"};
  app.require_subcommand(1);

  auto *run = app.add_subcommand("run", "run a detector over a single-column CSV series");
  std::map<std::string, std::string> run_values;
  std::string config_path;
  bool svg = false;
  run->add_option("--config", config_path, "key=value config file (a previous run's manifest works)");
  const char *value_flags[][2] = {
      {"--input", "input CSV"},        {"--mode", "infinite | fixed-k | baseline"},
      {"--alpha", "CRP concentration"}, {"--lambda", "expected run length of the hazard"},
      {"--k", "class count (fixed-k)"}, {"--beta", "Dirichlet smoothing (fixed-k)"},
      {"--eta-mu", "initial mean learning rate"}, {"--eta-sigma", "initial variance learning rate"},
      {"--decay", "learning-rate decay per win"}, {"--var-floor", "lower bound on class variance"},
      {"--var-update", "natural | log"},          {"--candidate-mu", "at-observation | fixed"},
      {"--candidate-mu0", "candidate mean when fixed"}, {"--candidate-var", "candidate variance"},
      {"--prune", "posterior mass threshold (0 disables)"}, {"--prune-top", "keep only the M heaviest run lengths"},
      {"--cp-rule", "map-drop | mass-near-zero"}, {"--drop-fraction", "map-drop ratio"},
      {"--mass-window", "mass-near-zero window"},  {"--mass-threshold", "mass-near-zero threshold"},
      {"--mu0", "baseline prior mean"},            {"--kappa0", "baseline prior strength"},
      {"--a0", "baseline prior shape"},            {"--b0", "baseline prior scale"},
      {"--seed", "random seed"},                   {"--out", "output directory"}};
  for (const auto &flag : value_flags) {
    const std::string key = ihcpd::cli::normalise_key(std::string(flag[0] + 2));
    run->add_option_function<std::string>(flag[0], [&run_values, key](const std::string &v) { run_values[key] = v; },
                                           flag[1]);
  }
  run->add_flag("--svg", svg, "also write plot.svg");

  auto *synth = app.add_subcommand("synth", "generate a piecewise-Gaussian series");
  std::string segments;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  std::string synth_truth;
  synth->add_option("--segments", segments, "len:mu:var[:class],...")->required();
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--out", synth_out, "output CSV")->required();
  synth->add_option("--truth", synth_truth, "truth CSV (default <out>.truth.csv)");

  auto *score = app.add_subcommand("score", "compare detected change points with ground truth");
  std::string pred_path;
  std::string truth_path;
  std::size_t tolerance = 10;
  score->add_option("--pred", pred_path, "changepoints.csv from a run")->required();
  score->add_option("--truth", truth_path, "truth CSV")->required();
  score->add_option("--tolerance", tolerance, "match window in steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (run->parsed()) {
      if (svg) run_values["svg"] = "true";
      std::optional<std::filesystem::path> file;
      if (!config_path.empty()) file = config_path;
      return cmd_run(run_values, file);
    }
    if (synth->parsed()) return cmd_synth(segments, synth_seed, synth_out, synth_truth);
    if (score->parsed()) return cmd_score(pred_path, truth_path, tolerance);
  } catch (const ihcpd::InputError &e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const ihcpd::ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kInternalError;
}
