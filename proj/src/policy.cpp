#include "crowdscore/policy.hpp"

#include <algorithm>
#include <cmath>

namespace crowdscore {

void PolicyConfig::validate(int n_objects) const {
  if (!(pi_th_a >= 0.0 && pi_th_a < 1.0))
    throw InvalidConfigError("policy: pi_th_a must lie in [0, 1)");
  if (!(pi_th_e >= 0.0 && pi_th_e < 1.0))
    throw InvalidConfigError("policy: pi_th_e must lie in [0, 1)");
  if (pi_th_e > pi_th_a) throw InvalidConfigError("policy: pi_th_e must not exceed pi_th_a");
  if (bounded() && *m_max < n_objects)
    throw InvalidConfigError("policy: bounded budget must cover one evaluation per object");
  if (!bounded() && pi_th_a == 0.0)
    throw InvalidConfigError("policy: unbounded runs need pi_th_a > 0 to terminate");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kNone: return "none";
    case StopReason::kBudget: return "budget";
    case StopReason::kSingleton: return "singleton";
    case StopReason::kAccuracy: return "accuracy";
    case StopReason::kStall: return "stall";
  }
  return "?";
}

int WorkerPool::fresh() {
  if (supply_ && next_ >= *supply_)
    throw SupplyExhaustedError("worker pool of " + std::to_string(*supply_) + " exhausted");
  return next_++;
}

std::vector<int> allocate(const FitnessState& fitness, long m_so_far, const PolicyConfig& cfg,
                          bool initial_round, std::mt19937_64* tie_rng) {
  const int n = fitness.n();
  std::vector<int> counts(static_cast<size_t>(n), 0);

  long residual = cfg.bounded() ? std::max<long>(0, *cfg.m_max - m_so_far)
                                : static_cast<long>(n);

  // Candidates above the accuracy threshold, or everyone on the mandatory
  // first round.
  std::vector<int> passing;
  for (int i : fitness.contestants)
    if (initial_round || fitness.phi(i) > cfg.pi_th_a) passing.push_back(i);

  if (static_cast<long>(passing.size()) <= residual) {
    for (int i : passing) counts[static_cast<size_t>(i)] = 1;
    return counts;
  }

  // Bounded overflow: serve the largest fitness values first.
  std::vector<int> order = passing;
  if (tie_rng != nullptr && cfg.randomized_ties) std::shuffle(order.begin(), order.end(), *tie_rng);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return fitness.phi(a) > fitness.phi(b); });
  for (long r = 0; r < residual; ++r) counts[static_cast<size_t>(order[static_cast<size_t>(r)])] = 1;
  return counts;
}

std::vector<WorkerBatch> select_workers(const std::vector<int>& objects, int o_max,
                                        WorkerPool& pool, std::mt19937_64& rng) {
  if (objects.empty()) throw InvalidInstanceError("select_workers needs a nonempty object list");
  const int count = static_cast<int>(objects.size());
  std::vector<WorkerBatch> batches;

  if (count <= o_max) {
    WorkerBatch b;
    b.worker = pool.fresh();
    b.objects = objects;
    batches.push_back(std::move(b));
    return batches;
  }

  const int n_workers = (count + o_max - 1) / o_max;
  std::vector<int> shuffled = objects;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  const int base = count / n_workers;
  const int extra = count % n_workers;  // first `extra` batches get one more
  int pos = 0;
  for (int w = 0; w < n_workers; ++w) {
    const int size = base + (w < extra ? 1 : 0);
    WorkerBatch b;
    b.worker = pool.fresh();
    b.objects.assign(shuffled.begin() + pos, shuffled.begin() + pos + size);
    pos += size;
    batches.push_back(std::move(b));
  }
  return batches;
}

StopReason should_terminate(const FitnessState& fitness, long m_so_far, const PolicyConfig& cfg) {
  if (cfg.bounded() && m_so_far >= *cfg.m_max) return StopReason::kBudget;
  if (fitness.contestants.size() == 1) return StopReason::kSingleton;
  int passing = 0;
  for (int i : fitness.contestants)
    if (fitness.phi(i) > cfg.pi_th_a) ++passing;
  if (passing == 1) return StopReason::kAccuracy;
  return StopReason::kNone;
}

int declare_winner(const Eigen::VectorXd& phi) {
  int best = -1;
  for (int i = 0; i < phi.size(); ++i) {
    if (std::isinf(phi(i)) && phi(i) < 0) continue;
    if (best < 0 || phi(i) > phi(best)) best = i;
  }
  if (best < 0) throw StallError("declare_winner: every object is out of the contest");
  return best;
}

}  // namespace crowdscore
