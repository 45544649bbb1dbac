#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "crowdscore/fitness.hpp"

namespace crowdscore {

/// Thresholds and budget driving allocation and termination.
struct PolicyConfig {
  /// Accuracy threshold: objects with fitness above it receive evaluations;
  /// a lone object above it ends the contest.
  double pi_th_a = 0.5;
  /// Elimination threshold for the removing variants; must not exceed
  /// pi_th_a.
  double pi_th_e = 0.0;
  /// Total evaluation budget; empty means unbounded.
  std::optional<long> m_max;
  /// Break fitness ties in the bounded top-B selection randomly instead of
  /// by lowest index.
  bool randomized_ties = false;

  bool bounded() const { return m_max.has_value(); }
  /// Normalized budget per object.
  double k(int n) const { return bounded() ? static_cast<double>(*m_max) / n : kInf; }
  void validate(int n_objects) const;
};

struct WorkerBatch {
  int worker = 0;
  std::vector<int> objects;
};

struct RoundPlan {
  std::vector<int> counts;  // one entry per object, 0 or 1
  std::vector<WorkerBatch> batches;
};

enum class StopReason { kNone, kBudget, kSingleton, kAccuracy, kStall };
std::string to_string(StopReason reason);

/// Hands out fresh worker ids; each worker serves exactly one batch.
class WorkerPool {
 public:
  explicit WorkerPool(std::optional<int> supply) : supply_(supply) {}
  int fresh();
  int used() const { return next_; }

 private:
  std::optional<int> supply_;
  int next_ = 0;
};

/// Per-round evaluation counts. Objects above the accuracy threshold get one
/// evaluation each; under a bounded budget at most the residual number of
/// objects is served, picking the largest fitness values first.
/// `initial_round` grants every contestant one evaluation regardless of the
/// threshold (fitness is uniform before any answer exists).
std::vector<int> allocate(const FitnessState& fitness, long m_so_far, const PolicyConfig& cfg,
                          bool initial_round = false, std::mt19937_64* tie_rng = nullptr);

/// Splits the objects of one round into single-batch assignments for fresh
/// workers: one worker takes everything if it fits the cap, otherwise
/// ceil(count/o_max) workers take near-equal random partitions.
std::vector<WorkerBatch> select_workers(const std::vector<int>& objects, int o_max,
                                        WorkerPool& pool, std::mt19937_64& rng);

/// Stop rules in fixed priority order: budget reached, singleton contestant
/// set, exactly one object above the accuracy threshold.
StopReason should_terminate(const FitnessState& fitness, long m_so_far, const PolicyConfig& cfg);

/// Object with the largest fitness; lowest index on ties.
int declare_winner(const Eigen::VectorXd& phi);

}  // namespace crowdscore
