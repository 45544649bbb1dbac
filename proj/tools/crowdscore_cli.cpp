#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "crowdscore/analytics.hpp"
#include "crowdscore/harness.hpp"

namespace {

using namespace crowdscore;

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
  int count = 2;
};

Range parse_range(const std::string& text) {
  Range r;
  char colon1 = 0, colon2 = 0;
  std::istringstream in(text);
  if (!(in >> r.lo >> colon1 >> r.hi >> colon2 >> r.count) || colon1 != ':' || colon2 != ':' ||
      r.count < 1 || !(in >> std::ws).eof())
    throw InvalidConfigError("range must be lo:hi:count, got '" + text + "'");
  return r;
}

int cmd_run(const std::string& config_path, long trials, long long seed,
            const std::string& output, const std::vector<std::string>& sets, int threads,
            bool trace) {
  ConfigText text = ConfigText::load(config_path);
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw InvalidConfigError("--set expects key=value, got '" + kv + "'");
    text.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (trials >= 0) text.set("trials", std::to_string(trials));
  if (seed >= 0) text.set("seed", std::to_string(seed));
  if (!output.empty()) text.set("output", output);
  if (threads > 0) {
    setenv("CROWDSCORE_THREADS", std::to_string(threads).c_str(), 1);
  }

  const ExperimentConfig cfg = build_experiment(text);

  if (trace) {
    // Single-trial debugging mode: run trial 0 of the first sweep point and
    // dump its per-round records.
    AlgorithmSpec algo = cfg.algo;
    algo.policy.pi_th_a = cfg.sweep.front();
    algo.policy.pi_th_e = cfg.sweep.front();
    const std::uint64_t s = derive_seed(cfg.master_seed, kTrialStream, 0, 0);
    const auto inst = sample_instance(cfg.scenario.quality_prior(), cfg.workers, s);
    const TrialResult r = run_trial(algo, inst, /*keep_trace=*/true);
    std::cout << r.trace_jsonl();
    std::cerr << "winner=" << r.winner << " correct=" << (r.correct ? 1 : 0)
              << " m_total=" << r.m_total << " stop=" << to_string(r.stop_reason) << "\n";
    return 0;
  }

  const SweepResult result = run_experiment(cfg);
  write_output(cfg.output, result.to_csv());
  if (!cfg.output.empty())
    std::cerr << "wrote " << result.rows.size() << " sweep rows to " << cfg.output << "\n";
  return 0;
}

int cmd_analytic(int w, const std::string& range_text, double sigma, const std::string& output) {
  const Range range = parse_range(range_text);
  std::ostringstream out;
  out << "delta_over_sigma,p_comp,p_est\n";
  char buf[160];
  for (int i = 0; i < range.count; ++i) {
    const double ds =
        range.count == 1 ? range.lo
                         : range.lo + (range.hi - range.lo) * i / (range.count - 1);
    std::snprintf(buf, sizeof(buf), "%.10g,%.12g,%.12g\n", ds,
                  analytics::p_comp(w, ds * sigma, sigma), analytics::p_est(w, ds * sigma, sigma));
    out << buf;
  }
  write_output(output, out.str());
  return 0;
}

int cmd_quantizer(int levels, const std::string& dist, double gamma, const std::string& scenario,
                  double bias_over_sigma, bool uniform, double lo, double hi, bool have_lo,
                  bool have_hi, const std::string& output) {
  AnswerDist blend;
  if (dist == "I") blend = AnswerDist::kGeneric;
  else if (dist == "II") blend = AnswerDist::kTopOnly;
  else if (dist == "III") blend = AnswerDist::kWeighted;
  else throw InvalidConfigError("--dist expects I, II or III");
  const QuantizerSpec spec = design_scenario_quantizer(
      Scenario::parse(scenario), levels, uniform, blend, gamma, bias_over_sigma,
      have_lo ? std::optional<double>(lo) : std::nullopt,
      have_hi ? std::optional<double>(hi) : std::nullopt);
  std::ostringstream out;
  out << "# level z_l w_l\n" << spec.to_table();
  write_output(output, out.str());
  return 0;
}

int cmd_list_scenarios() {
  std::cout <<
      "equally_spaced:N:ratio\n"
      "    N qualities on a fixed lattice in [-1, 1], spacing delta = 2/(N-1).\n"
      "    ratio = delta/sigma sets the evaluation-noise std to delta/ratio.\n"
      "    config: scenario.kind = equally_spaced, scenario.n, scenario.ratio\n"
      "gaussian:N:ratio\n"
      "    N qualities drawn i.i.d. from a zero-mean Gaussian; noise std is 1.\n"
      "    ratio = sigma_a/sigma sets the quality std.\n"
      "    config: scenario.kind = gaussian, scenario.n, scenario.ratio\n"
      "\n"
      "algorithms: gke gka gra bgka bgra uniform genie tournament majority\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive crowd-scoring contest simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment config and emit a CSV sweep");
  std::string config_path;
  run->add_option("--config", config_path, "Experiment config file")->required();
  long trials = -1;
  run->add_option("--trials", trials, "Override the trial count");
  long long seed = -1;
  run->add_option("--seed", seed, "Override the master seed");
  std::string output;
  run->add_option("--output", output, "Override the CSV output path");
  std::vector<std::string> sets;
  run->add_option("--set", sets, "Override any config key (key=value)");
  int threads = 0;
  run->add_option("--threads", threads, "Worker threads for trials");
  bool trace = false;
  run->add_flag("--trace", trace, "Run a single trial and dump per-round JSON records");

  auto* analytic =
      app.add_subcommand("analytic", "Closed-form comparison-vs-scoring error curves");
  int w = 101;
  analytic->add_option("--W", w, "Odd jury size");
  std::string ds_range = "0.05:3:60";
  analytic->add_option("--delta-sigma", ds_range, "Gap-over-noise grid as lo:hi:count");
  double sigma = 1.0;
  analytic->add_option("--sigma", sigma, "Evaluation-noise std");
  std::string an_output;
  analytic->add_option("--output", an_output, "CSV output path (default stdout)");

  auto* quant = app.add_subcommand("quantizer", "Design a scalar quantizer and print its table");
  int levels = 8;
  quant->add_option("--L,--levels", levels, "Number of levels");
  std::string dist = "III";
  quant->add_option("--dist", dist, "Answer blend: I (generic), II (top only), III (weighted)");
  double gamma = 0.5;
  quant->add_option("--gamma", gamma, "Geometric weight base for dist III");
  std::string scenario = "gaussian:256:3";
  quant->add_option("--scenario", scenario, "Scenario as kind:N:ratio");
  double bias_over_sigma = 0.0;
  quant->add_option("--bias-over-sigma", bias_over_sigma, "Worker-bias std over noise std");
  bool uniform = false;
  quant->add_flag("--uniform", uniform, "Equal-width design instead of Lloyd");
  double qlo = 0.0, qhi = 0.0;
  auto* lo_opt = quant->add_option("--lo", qlo, "Uniform design lower edge");
  auto* hi_opt = quant->add_option("--hi", qhi, "Uniform design upper edge");
  std::string q_output;
  quant->add_option("--output", q_output, "Table output path (default stdout)");

  auto* list = app.add_subcommand("list-scenarios", "Describe available scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed())
      return cmd_run(config_path, trials, seed, output, sets, threads, trace);
    if (analytic->parsed()) return cmd_analytic(w, ds_range, sigma, an_output);
    if (quant->parsed())
      return cmd_quantizer(levels, dist, gamma, scenario, bias_over_sigma, uniform, qlo, qhi,
                           lo_opt->count() > 0, hi_opt->count() > 0, q_output);
    if (list->parsed()) return cmd_list_scenarios();
  } catch (const InvalidConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
