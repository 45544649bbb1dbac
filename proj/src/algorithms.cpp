#include "crowdscore/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>

namespace crowdscore {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kGKE: return "gke";
    case Variant::kGKA: return "gka";
    case Variant::kGRA: return "gra";
    case Variant::kBGKA: return "bgka";
    case Variant::kBGRA: return "bgra";
    case Variant::kUniform: return "uniform";
    case Variant::kGenieAided: return "genie";
    case Variant::kTournament: return "tournament";
    case Variant::kMajority: return "majority";
  }
  return "?";
}

void AlgorithmSpec::validate(int n_objects) const {
  policy.validate(n_objects);
  const bool has_budget = policy.bounded();
  switch (variant) {
    case Variant::kGKE:
    case Variant::kGKA:
    case Variant::kGRA:
      if (has_budget)
        throw InvalidConfigError("algo: " + to_string(variant) +
                                 " is unbounded; use the bounded variant with policy.k");
      break;
    case Variant::kBGKA:
    case Variant::kBGRA:
      if (!has_budget)
        throw InvalidConfigError("algo: bounded variants need a budget (policy.k or m_max)");
      break;
    case Variant::kUniform:
      if (uniform_evals < 1) throw InvalidConfigError("algo: uniform needs evals per object >= 1");
      break;
    case Variant::kGenieAided:
      break;
    case Variant::kTournament:
      if (tournament_group < 2) throw InvalidConfigError("algo: tournament group size must be >= 2");
      break;
    case Variant::kMajority:
      if (n_objects != 2)
        throw InvalidConfigError("algo: majority comparison is defined for exactly two objects");
      if (majority_workers < 1 || majority_workers % 2 == 0)
        throw InvalidConfigError("algo: majority comparison needs an odd worker count");
      break;
  }
  if (eliminates() && !(policy.pi_th_e > 0.0))
    throw InvalidConfigError("algo: eliminating variants need pi_th_e > 0");
  if (quantizer) quantizer->validate();
}

std::string TrialResult::trace_jsonl() const {
  std::ostringstream out;
  for (const RoundTrace& t : trace) {
    nlohmann::json j;
    j["round"] = t.round;
    j["m_total"] = t.m_total;
    j["contestants"] = t.contestants;
    std::vector<double> phi(t.phi.data(), t.phi.data() + t.phi.size());
    j["phi"] = phi;
    j["allocations"] = t.allocations;
    out << j.dump() << '\n';
  }
  return out.str();
}

namespace {

// Safety valve against configurations that can never separate the objects
// (e.g. a one-level quantizer under an unbounded budget).
constexpr int kRoundCap = 100000;

PriorSpec derive_prior(const AlgorithmSpec& spec, const ProblemInstance& inst) {
  if (spec.prior_override) return *spec.prior_override;
  PriorSpec p = PriorSpec::for_quality_prior(inst.prior());
  if (spec.bias_mode == BiasMode::kEstimate) {
    p.bias_mean = inst.workers().bias_mean;
    p.bias_std = inst.workers().bias_std;
  }
  return p;
}

class TrialEngine {
 public:
  TrialEngine(const AlgorithmSpec& spec, const ProblemInstance& inst, bool keep_trace)
      : spec_(spec),
        inst_(inst),
        keep_trace_(keep_trace),
        log_(inst.n(), inst.workers().o_max),
        post_(derive_prior(spec, inst), inst.n(),
              inst.workers().noise_std * inst.workers().noise_std),
        pool_(inst.workers().supply),
        answer_rng_(make_rng(derive_seed(inst.seed(), kAnswerStream))),
        policy_rng_(make_rng(derive_seed(inst.seed(), kPolicyStream))) {}

  TrialResult run() {
    spec_.validate(inst_.n());
    switch (spec_.variant) {
      case Variant::kGKE:
      case Variant::kGKA:
      case Variant::kGRA:
      case Variant::kBGKA:
      case Variant::kBGRA:
        return run_greedy();
      case Variant::kUniform:
        return run_uniform();
      case Variant::kGenieAided:
        return run_genie();
      case Variant::kTournament:
        return run_tournament_stages();
      case Variant::kMajority:
        return run_majority();
    }
    throw std::logic_error("unreachable variant");
  }

 private:
  long m_total() const { return log_.total(); }

  void execute_round(const std::vector<int>& counts, const FitnessState* fitness) {
    std::vector<int> objects;
    for (int i = 0; i < static_cast<int>(counts.size()); ++i)
      if (counts[static_cast<size_t>(i)] > 0) objects.push_back(i);
    const auto batches = select_workers(objects, inst_.workers().o_max, pool_, policy_rng_);
    if (rounds_ >= kRoundCap)
      throw StallError("round cap reached without any stop rule firing; the configuration "
                       "cannot separate the objects");
    ++rounds_;
    for (const WorkerBatch& b : batches) {
      for (int object : b.objects) {
        const double raw = elicit_answer(inst_, log_, object, b.worker, answer_rng_);
        const double reported = spec_.quantizer ? spec_.quantizer->quantize(raw) : raw;
        log_.append({object, b.worker, rounds_, raw, reported});
        post_.add_answer(object, b.worker, reported);
      }
    }
    if (keep_trace_) {
      RoundTrace t;
      t.round = rounds_;
      t.m_total = m_total();
      t.allocations = counts;
      if (fitness != nullptr) {
        t.phi = fitness->phi;
        t.contestants = fitness->contestants;
      } else {
        t.phi = Eigen::VectorXd::Zero(inst_.n());
        for (int i = 0; i < inst_.n(); ++i) t.contestants.push_back(i);
      }
      trace_.push_back(std::move(t));
    }
  }

  Eigen::VectorXd fitness_values(const std::vector<int>& contestants) {
    QualityMarginal marginal = post_.quality_marginal();
    if (!spec_.exact_fitness()) return pi_approx(marginal, contestants);
    // Exact fitness integrates the product-CDF form over the marginal
    // variances; correlations are dropped for the linear-time route.
    if (marginal.has_correlations()) marginal = marginal.diagonal_copy();
    QuadratureMethod method;
    method.abs_tol = 1e-9;
    if (spec_.policy.pi_th_a > 0.0) method.negligible = std::min(1e-12, spec_.policy.pi_th_a * 1e-6);
    return pi_exact(marginal, contestants, method).pi;
  }

  TrialResult finish(const FitnessState& fitness, StopReason reason) {
    TrialResult r;
    r.winner = declare_winner(fitness.phi);
    r.correct = r.winner == inst_.true_best();
    r.m_total = m_total();
    r.rounds = rounds_;
    r.stop_reason = reason;
    r.trace = std::move(trace_);
    return r;
  }

  TrialResult run_greedy() {
    std::vector<int> contestants(static_cast<size_t>(inst_.n()));
    for (int i = 0; i < inst_.n(); ++i) contestants[static_cast<size_t>(i)] = i;

    // Mandatory first round: fitness is uniform before any answer exists,
    // so every contestant gets one evaluation regardless of the threshold.
    FitnessState uniform =
        FitnessState::from_values(Eigen::VectorXd::Zero(inst_.n()), contestants, inst_.n());
    execute_round(allocate(uniform, 0, spec_.policy, /*initial_round=*/true), nullptr);

    for (;;) {
      const Eigen::VectorXd values = fitness_values(contestants);
      FitnessState fitness =
          spec_.eliminates()
              ? apply_elimination(values, contestants, spec_.policy.pi_th_e, inst_.n())
              : FitnessState::from_values(values, contestants, inst_.n());
      contestants = fitness.contestants;

      const StopReason reason = should_terminate(fitness, m_total(), spec_.policy);
      if (reason != StopReason::kNone) return finish(fitness, reason);

      const std::vector<int> counts =
          allocate(fitness, m_total(), spec_.policy, false,
                   spec_.policy.randomized_ties ? &policy_rng_ : nullptr);
      if (std::all_of(counts.begin(), counts.end(), [](int c) { return c == 0; }))
        return finish(fitness, StopReason::kStall);
      execute_round(counts, &fitness);
    }
  }

  TrialResult run_uniform() {
    std::vector<int> all(static_cast<size_t>(inst_.n()));
    for (int i = 0; i < inst_.n(); ++i) all[static_cast<size_t>(i)] = i;
    std::vector<int> counts(static_cast<size_t>(inst_.n()), 1);
    for (int pass = 0; pass < spec_.uniform_evals; ++pass) execute_round(counts, nullptr);

    FitnessState fitness =
        FitnessState::from_values(pi_approx(post_.quality_marginal(), all), all, inst_.n());
    // The whole run is one logical round of fixed size.
    rounds_ = 1;
    return finish(fitness, StopReason::kBudget);
  }

  TrialResult run_genie() {
    std::vector<int> all(static_cast<size_t>(inst_.n()));
    for (int i = 0; i < inst_.n(); ++i) all[static_cast<size_t>(i)] = i;
    FitnessState uniform =
        FitnessState::from_values(Eigen::VectorXd::Zero(inst_.n()), all, inst_.n());
    execute_round(allocate(uniform, 0, spec_.policy, true), nullptr);

    // The genie reveals the two truly best objects; everyone else is out.
    int best = 0;
    for (int i = 1; i < inst_.n(); ++i)
      if (inst_.quality(i) > inst_.quality(best)) best = i;
    int second = best == 0 ? 1 : 0;
    for (int i = 0; i < inst_.n(); ++i)
      if (i != best && inst_.quality(i) > inst_.quality(second)) second = i;
    std::vector<int> pair = {std::min(best, second), std::max(best, second)};

    for (;;) {
      const Eigen::VectorXd values = pi_approx(post_.quality_marginal(), pair);
      FitnessState fitness = FitnessState::from_values(values, pair, inst_.n());
      const StopReason reason = should_terminate(fitness, m_total(), spec_.policy);
      if (reason != StopReason::kNone) return finish(fitness, reason);

      // One evaluation per round, kept even across the pair.
      const int a = pair[0], b = pair[1];
      const int target = log_.count_for_object(a) <= log_.count_for_object(b) ? a : b;
      std::vector<int> counts(static_cast<size_t>(inst_.n()), 0);
      counts[static_cast<size_t>(target)] = 1;
      execute_round(counts, &fitness);
    }
  }

  // Inner contest of one tournament group under the unbounded greedy rule.
  // Returns the group winner, or -1 if the global budget ran out.
  int run_group_contest(const std::vector<int>& group, FitnessState& last_fitness) {
    for (;;) {
      // Members never evaluated yet get their mandatory evaluation first.
      std::vector<int> counts(static_cast<size_t>(inst_.n()), 0);
      bool any_fresh = false;
      for (int i : group)
        if (log_.count_for_object(i) == 0) {
          counts[static_cast<size_t>(i)] = 1;
          any_fresh = true;
        }
      if (any_fresh) {
        execute_round(counts, nullptr);
        continue;
      }

      const Eigen::VectorXd values = pi_approx(post_.quality_marginal(), group);
      last_fitness = FitnessState::from_values(values, group, inst_.n());
      const StopReason reason = should_terminate(last_fitness, m_total(), spec_.policy);
      if (reason == StopReason::kBudget) return -1;
      if (reason != StopReason::kNone) return declare_winner(last_fitness.phi);

      const std::vector<int> plan = allocate(last_fitness, m_total(), spec_.policy);
      if (std::all_of(plan.begin(), plan.end(), [](int c) { return c == 0; }))
        return declare_winner(last_fitness.phi);  // group-local stall
      execute_round(plan, &last_fitness);
    }
  }

  TrialResult run_tournament_stages() {
    std::vector<int> survivors(static_cast<size_t>(inst_.n()));
    for (int i = 0; i < inst_.n(); ++i) survivors[static_cast<size_t>(i)] = i;
    const int nb = spec_.tournament_group;
    FitnessState fitness;

    while (survivors.size() > 1) {
      // Random partition into groups of nb; a trailing smaller group is
      // allowed and a singleton group advances unopposed.
      if (survivors.size() > static_cast<size_t>(nb))
        std::shuffle(survivors.begin(), survivors.end(), policy_rng_);
      std::vector<int> next;
      for (size_t start = 0; start < survivors.size(); start += static_cast<size_t>(nb)) {
        const size_t end = std::min(survivors.size(), start + static_cast<size_t>(nb));
        std::vector<int> group(survivors.begin() + static_cast<long>(start),
                               survivors.begin() + static_cast<long>(end));
        std::sort(group.begin(), group.end());
        if (group.size() == 1) {
          next.push_back(group.front());
          continue;
        }
        const int winner = run_group_contest(group, fitness);
        if (winner < 0) {
          // Global budget exhausted mid-stage: decide on current knowledge
          // over everything still alive.
          std::vector<int> alive = next;
          alive.insert(alive.end(), survivors.begin() + static_cast<long>(start),
                       survivors.end());
          std::sort(alive.begin(), alive.end());
          FitnessState f = FitnessState::from_values(
              pi_approx(post_.quality_marginal(), alive), alive, inst_.n());
          return finish(f, StopReason::kBudget);
        }
        next.push_back(winner);
      }
      std::sort(next.begin(), next.end());
      survivors = next;
    }

    std::vector<int> last = {survivors.front()};
    FitnessState f = FitnessState::from_values(Eigen::VectorXd::Ones(inst_.n()), last, inst_.n());
    return finish(f, StopReason::kSingleton);
  }

  TrialResult run_majority() {
    const int w_count = spec_.majority_workers;
    const double d0 = inst_.quality(0);
    const double d1 = inst_.quality(1);
    int votes_for_0 = 0;
    for (int k = 0; k < w_count; ++k) {
      const int worker = pool_.fresh();
      const double bias = inst_.worker_bias(worker);
      const double sd = std::sqrt(inst_.worker_variance(worker));
      // Thurstone-style comparison: the worker scores both objects privately
      // and reports which looked better. Her bias shifts both latents and
      // cancels in the difference.
      const double latent0 = d0 + bias + draw_normal(answer_rng_, 0.0, sd);
      const double latent1 = d1 + bias + draw_normal(answer_rng_, 0.0, sd);
      if (latent0 > latent1) ++votes_for_0;
    }
    TrialResult r;
    r.winner = votes_for_0 * 2 > w_count ? 0 : 1;
    r.correct = r.winner == inst_.true_best();
    r.m_total = w_count;
    r.rounds = 1;
    r.stop_reason = StopReason::kBudget;
    return r;
  }

  AlgorithmSpec spec_;
  const ProblemInstance& inst_;
  bool keep_trace_ = false;
  AnswerLog log_;
  GaussianPosterior post_;
  WorkerPool pool_;
  std::mt19937_64 answer_rng_;
  std::mt19937_64 policy_rng_;
  int rounds_ = 0;
  std::vector<RoundTrace> trace_;
};

}  // namespace

TrialResult run_trial(const AlgorithmSpec& spec, const ProblemInstance& inst, bool keep_trace) {
  return TrialEngine(spec, inst, keep_trace).run();
}

TrialResult run_genie_aided(const ProblemInstance& inst, double pi_th_a,
                            std::optional<long> m_max, bool keep_trace) {
  AlgorithmSpec spec;
  spec.variant = Variant::kGenieAided;
  spec.policy.pi_th_a = pi_th_a;
  spec.policy.m_max = m_max;
  return run_trial(spec, inst, keep_trace);
}

TrialResult run_tournament(const ProblemInstance& inst, int n_b, const PolicyConfig& inner_policy,
                           bool keep_trace) {
  AlgorithmSpec spec;
  spec.variant = Variant::kTournament;
  spec.tournament_group = n_b;
  spec.policy = inner_policy;
  return run_trial(spec, inst, keep_trace);
}

TrialResult run_majority_comparison(const ProblemInstance& inst, int w_workers) {
  AlgorithmSpec spec;
  spec.variant = Variant::kMajority;
  spec.majority_workers = w_workers;
  // Termination is by construction; thresholds are unused but validated.
  spec.policy.pi_th_a = 0.5;
  return run_trial(spec, inst);
}

}  // namespace crowdscore
