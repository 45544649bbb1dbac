#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "crowdscore/algorithms.hpp"

namespace crowdscore {

/// The two experiment worlds: a fixed quality lattice on [-1, 1], or i.i.d.
/// Gaussian qualities. `ratio` is the scale of the problem difficulty:
/// spacing over noise std for the lattice, quality std over noise std for
/// the Gaussian case (whose noise std is fixed at 1).
struct Scenario {
  enum class Kind { kEquallySpaced, kGaussian };
  Kind kind = Kind::kEquallySpaced;
  int n = 16;
  double ratio = 2.0;

  double delta() const;      // lattice spacing (EquallySpaced only)
  double noise_std() const;  // evaluation-noise std implied by the ratio
  QualityPrior quality_prior() const;
  std::string name() const;
  void validate() const;
  /// Parses the compact "kind:N:ratio" form used on command lines.
  static Scenario parse(const std::string& text);
};

struct ExperimentConfig {
  Scenario scenario;
  AlgorithmSpec algo;
  WorkerModel workers;  // noise_std is filled from the scenario
  /// Threshold sweep; each value is used for both the accuracy and the
  /// elimination threshold. Strictly descending.
  std::vector<double> sweep;
  int trials = 1000;
  std::uint64_t master_seed = 1;
  std::string output;  // CSV path; empty writes to stdout

  void validate() const;

  /// Flat "dotted.key = value" text format; '#' starts a comment.
  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_text(const std::string& text, const std::string& origin = "<text>");
};

/// Parsed key-value config text, with line numbers for diagnostics. Later
/// assignments (including CLI overrides) win.
struct ConfigText {
  std::map<std::string, std::string> values;
  std::map<std::string, int> lines;
  std::string origin = "<text>";

  void set(const std::string& key, const std::string& value);
  static ConfigText parse(const std::string& text, const std::string& origin = "<text>");
  static ConfigText load(const std::string& path);
};

/// Builds (and fully validates) an experiment from parsed config text.
ExperimentConfig build_experiment(const ConfigText& text);

/// Designs the quantizer an experiment front-ends its answers with: Lloyd
/// over the scenario's blended answer density, or the equal-width baseline.
/// `bias_over_sigma` widens the evaluation-error density used in the design.
QuantizerSpec design_scenario_quantizer(const Scenario& scenario, int levels, bool uniform,
                                        AnswerDist dist, double gamma, double bias_over_sigma,
                                        std::optional<double> lo = std::nullopt,
                                        std::optional<double> hi = std::nullopt,
                                        int grid_points = 8192);

struct SweepRow {
  double pi_th = 0.0;
  int trials = 0;
  double p_e = 0.0;
  double p_e_ci95 = 0.0;  // Wilson interval halfwidth
  double p_e_lo = 0.0;    // Wilson bounds, kept for analysis
  double p_e_hi = 0.0;
  double m_bar_per_n = 0.0;
  double m_bar_ci95 = 0.0;
  double rounds_mean = 0.0;
  long stop_budget = 0;
  long stop_singleton = 0;
  long stop_accuracy = 0;
  long stop_stall = 0;
  std::string error;  // nonempty marks a diagnostic row
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::string to_csv() const;
};

/// Runs the full threshold sweep: independent trials with per-trial seeds
/// derived from (master seed, sweep index, trial index), aggregated in trial
/// order so parallel and serial execution agree bit for bit. A failing trial
/// aborts only its sweep point and leaves a diagnostic row.
SweepResult run_experiment(const ExperimentConfig& cfg);

/// (pi_th, p_e, m_bar/n) rows for threshold-profile plots of bounded runs.
std::vector<std::array<double, 3>> threshold_profile(const ExperimentConfig& cfg);

/// 95% Wilson score interval for a binomial proportion.
struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
  double halfwidth() const { return 0.5 * (hi - lo); }
};
WilsonInterval wilson_interval(long successes, long n);

/// Worker threads used for trials; reads CROWDSCORE_THREADS, defaulting to
/// the hardware concurrency.
int harness_thread_count();

}  // namespace crowdscore
