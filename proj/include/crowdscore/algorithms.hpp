#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crowdscore/policy.hpp"
#include "crowdscore/quantizer.hpp"

namespace crowdscore {

enum class Variant {
  kGKE,         // exact max-probability fitness, keep everyone, accuracy stop
  kGKA,         // pairwise-surrogate fitness, keep everyone, accuracy stop
  kGRA,         // pairwise-surrogate fitness with eliminations, singleton stop
  kBGKA,        // GKA under a total budget
  kBGRA,        // GRA under a total budget
  kUniform,     // fixed evaluations per object, no adaptivity
  kGenieAided,  // told the true top two after the first round
  kTournament,  // staged random groups, survivors advance with full history
  kMajority,    // two objects, majority vote over direct comparisons
};

std::string to_string(Variant v);

enum class BiasMode {
  kNone,      // world has no bias worth modeling
  kEstimate,  // model worker bias in the joint posterior
  kIgnore,    // world is biased but the estimator pretends otherwise
};

struct AlgorithmSpec {
  Variant variant = Variant::kGKA;
  PolicyConfig policy;
  BiasMode bias_mode = BiasMode::kNone;
  std::optional<QuantizerSpec> quantizer;
  int uniform_evals = 1;     // Uniform: evaluations per object
  int tournament_group = 2;  // Tournament: group size N_b
  int majority_workers = 1;  // Majority: odd worker count
  /// Estimator prior override; by default derived from the instance's
  /// generative prior and the worker model.
  std::optional<PriorSpec> prior_override;

  bool eliminates() const { return variant == Variant::kGRA || variant == Variant::kBGRA; }
  bool exact_fitness() const { return variant == Variant::kGKE; }
  void validate(int n_objects) const;
};

struct RoundTrace {
  int round = 0;
  long m_total = 0;
  std::vector<int> contestants;
  Eigen::VectorXd phi;
  std::vector<int> allocations;
};

struct TrialResult {
  int winner = -1;
  bool correct = false;
  long m_total = 0;
  int rounds = 0;
  StopReason stop_reason = StopReason::kNone;
  std::vector<RoundTrace> trace;

  /// One structured record per round, line-delimited, for debugging runs.
  std::string trace_jsonl() const;
};

/// Runs one full contest of the configured algorithm against the instance.
/// All randomness derives from the instance seed, so (spec, seed) fully
/// determines the result.
TrialResult run_trial(const AlgorithmSpec& spec, const ProblemInstance& inst,
                      bool keep_trace = false);

/// Reference upper bound: after the first round the scheduler is told the
/// identity of the two truly best objects and evaluates only those.
TrialResult run_genie_aided(const ProblemInstance& inst, double pi_th_a,
                            std::optional<long> m_max = std::nullopt, bool keep_trace = false);

/// Staged contest over random groups of size n_b; group winners advance and
/// keep their full answer history.
TrialResult run_tournament(const ProblemInstance& inst, int n_b, const PolicyConfig& inner_policy,
                           bool keep_trace = false);

/// Majority vote over direct pairwise comparisons of a two-object instance.
TrialResult run_majority_comparison(const ProblemInstance& inst, int w_workers);

}  // namespace crowdscore
