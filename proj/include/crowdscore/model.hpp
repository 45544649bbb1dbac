#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "crowdscore/errors.hpp"
#include "crowdscore/rng.hpp"

namespace crowdscore {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class QualityKind { kGaussian, kEquallySpaced, kUnknown };

/// A-priori model of the latent object qualities. Gaussian and EquallySpaced
/// are generative; Unknown only makes sense on the estimator side, where it
/// maps to an infinite prior variance.
struct QualityPrior {
  QualityKind kind = QualityKind::kGaussian;
  int n = 0;  // object count
  double mean = 0.0;
  double stddev = 1.0;
  double lo = -1.0;
  double hi = 1.0;

  static QualityPrior gaussian(int n, double mean, double stddev);
  static QualityPrior equally_spaced(int n, double lo, double hi);
  static QualityPrior unknown(int n);

  /// Gap between adjacent quality values (EquallySpaced only).
  double spacing() const;
  void validate() const;
};

/// Crowd model: per-worker additive bias, evaluation noise, optional skill
/// heterogeneity, and the single-batch capacity cap.
struct WorkerModel {
  double bias_mean = 0.0;
  double bias_std = 0.0;  // 0 means workers are unbiased
  double noise_std = 1.0;
  /// Skill spread: per-worker variance uniform in [(1-e)s^2, (1+e)s^2].
  double variance_spread = 0.0;
  /// Max evaluations per worker, delivered in one batch in a single round.
  int o_max = 1;
  /// Finite pool size; empty means workers never run out.
  std::optional<int> supply;

  void validate() const;
};

/// Hidden ground truth one trial runs against. Worker biases and variances
/// are realized lazily but depend only on (seed, worker id), so results do
/// not depend on enrollment order.
class ProblemInstance {
 public:
  ProblemInstance(const QualityPrior& prior, const WorkerModel& workers, std::uint64_t seed);

  int n() const { return static_cast<int>(qualities_.size()); }
  const std::vector<double>& qualities() const { return qualities_; }
  double quality(int object) const { return qualities_.at(static_cast<size_t>(object)); }
  /// Index of the true top-quality object; lowest index wins exact ties.
  int true_best() const { return true_best_; }

  const QualityPrior& prior() const { return prior_; }
  const WorkerModel& workers() const { return workers_; }
  std::uint64_t seed() const { return seed_; }

  double worker_bias(int worker) const;
  double worker_variance(int worker) const;
  int workers_realized() const { return static_cast<int>(biases_.size()); }
  const std::vector<double>& realized_biases() const { return biases_; }

 private:
  void realize_workers_up_to(int worker) const;

  QualityPrior prior_;
  WorkerModel workers_;
  std::uint64_t seed_ = 0;
  std::vector<double> qualities_;
  int true_best_ = 0;
  mutable std::vector<double> biases_;
  mutable std::vector<double> variances_;
};

/// Draws the ground truth for one trial. EquallySpaced qualities are placed
/// on a fixed lattice and then randomly relabeled, so no algorithm can read
/// the ranking off the object ids.
ProblemInstance sample_instance(const QualityPrior& prior, const WorkerModel& workers,
                                std::uint64_t seed);

struct AnswerRecord {
  int object = 0;
  int worker = 0;
  int round = 0;
  double raw = 0.0;       // unquantized evaluation
  double reported = 0.0;  // what the estimator sees (quantized if applicable)
};

/// Append-only record of all evaluations plus the allocation bookkeeping.
/// Enforces the non-degenerate allocation rule (every object evaluated at
/// most once per worker) and the per-worker capacity cap.
class AnswerLog {
 public:
  AnswerLog(int n_objects, int o_max);

  void append(const AnswerRecord& rec);

  const std::vector<AnswerRecord>& entries() const { return entries_; }
  int total() const { return static_cast<int>(entries_.size()); }
  int n_objects() const { return n_objects_; }
  int o_max() const { return o_max_; }

  int count_for_object(int object) const;
  int count_for_worker(int worker) const;
  /// Number of distinct workers that appear in the log.
  int workers_used() const { return static_cast<int>(worker_counts_.size()); }
  bool pair_used(int object, int worker) const;

  /// Dense binary allocation matrix with one row per answer and a single 1
  /// in the column of the evaluated object.
  Eigen::MatrixXd object_allocation_matrix() const;
  /// Same, with one column per worker (in order of first appearance).
  Eigen::MatrixXd worker_allocation_matrix() const;
  Eigen::VectorXd reported_values() const;
  /// Worker ids in order of first appearance (column order of the worker
  /// allocation matrix).
  const std::vector<int>& worker_order() const { return worker_order_; }

 private:
  int n_objects_ = 0;
  int o_max_ = 0;
  std::vector<AnswerRecord> entries_;
  std::vector<int> object_counts_;
  std::vector<int> worker_order_;
  std::unordered_map<int, int> worker_counts_;
  std::unordered_set<std::uint64_t> used_pairs_;
};

/// Draws one noisy evaluation of `object` by `worker`:
/// quality + worker bias + Gaussian evaluation error. Pure generation; the
/// caller is responsible for logging. Preconditions (worker capacity, fresh
/// pair) are checked against the log.
double elicit_answer(const ProblemInstance& inst, const AnswerLog& log, int object, int worker,
                     std::mt19937_64& rng);

}  // namespace crowdscore
