#include "crowdscore/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace crowdscore {

QualityPrior QualityPrior::gaussian(int n, double mean, double stddev) {
  QualityPrior p;
  p.kind = QualityKind::kGaussian;
  p.n = n;
  p.mean = mean;
  p.stddev = stddev;
  p.validate();
  return p;
}

QualityPrior QualityPrior::equally_spaced(int n, double lo, double hi) {
  QualityPrior p;
  p.kind = QualityKind::kEquallySpaced;
  p.n = n;
  p.lo = lo;
  p.hi = hi;
  p.validate();
  return p;
}

QualityPrior QualityPrior::unknown(int n) {
  QualityPrior p;
  p.kind = QualityKind::kUnknown;
  p.n = n;
  p.stddev = kInf;
  p.validate();
  return p;
}

double QualityPrior::spacing() const {
  if (kind != QualityKind::kEquallySpaced)
    throw InvalidInstanceError("spacing() is only defined for equally spaced priors");
  return (hi - lo) / static_cast<double>(n - 1);
}

void QualityPrior::validate() const {
  if (n < 2) throw InvalidInstanceError("quality prior needs at least 2 objects");
  switch (kind) {
    case QualityKind::kGaussian:
      if (!(stddev > 0.0)) throw InvalidInstanceError("Gaussian quality prior needs stddev > 0");
      break;
    case QualityKind::kEquallySpaced:
      if (!(lo < hi)) throw InvalidInstanceError("equally spaced prior needs lo < hi");
      break;
    case QualityKind::kUnknown:
      break;
  }
}

void WorkerModel::validate() const {
  if (!(noise_std > 0.0)) throw InvalidInstanceError("worker noise_std must be > 0");
  if (bias_std < 0.0) throw InvalidInstanceError("worker bias_std must be >= 0");
  if (variance_spread < 0.0 || variance_spread > 1.0)
    throw InvalidInstanceError("variance_spread must lie in [0, 1]");
  if (o_max < 1) throw InvalidInstanceError("o_max must be >= 1");
  if (supply && *supply < 1) throw InvalidInstanceError("finite worker supply must be >= 1");
}

ProblemInstance::ProblemInstance(const QualityPrior& prior, const WorkerModel& workers,
                                 std::uint64_t seed)
    : prior_(prior), workers_(workers), seed_(seed) {
  prior_.validate();
  workers_.validate();

  const int n = prior_.n;
  qualities_.resize(static_cast<size_t>(n));
  auto rng = make_rng(derive_seed(seed_, kQualityStream));
  switch (prior_.kind) {
    case QualityKind::kGaussian:
      for (double& q : qualities_) q = draw_normal(rng, prior_.mean, prior_.stddev);
      break;
    case QualityKind::kEquallySpaced: {
      const double step = prior_.spacing();
      for (int i = 0; i < n; ++i) qualities_[static_cast<size_t>(i)] = prior_.lo + i * step;
      std::shuffle(qualities_.begin(), qualities_.end(), rng);
      break;
    }
    case QualityKind::kUnknown:
      throw InvalidInstanceError("cannot sample qualities from an unknown prior");
  }

  true_best_ = 0;
  for (int i = 1; i < n; ++i)
    if (qualities_[static_cast<size_t>(i)] > qualities_[static_cast<size_t>(true_best_)])
      true_best_ = i;
}

void ProblemInstance::realize_workers_up_to(int worker) const {
  if (worker < 0) throw InvalidInstanceError("worker id must be >= 0");
  if (workers_.supply && worker >= *workers_.supply)
    throw SupplyExhaustedError("worker id " + std::to_string(worker) +
                               " exceeds the finite supply of " +
                               std::to_string(*workers_.supply));
  const double s2 = workers_.noise_std * workers_.noise_std;
  while (static_cast<int>(biases_.size()) <= worker) {
    const auto w = static_cast<std::uint64_t>(biases_.size());
    auto rng = make_rng(derive_seed(seed_, kWorkerStream, w));
    const double bias =
        workers_.bias_std > 0.0 ? draw_normal(rng, workers_.bias_mean, workers_.bias_std)
                                : workers_.bias_mean;
    double var = s2;
    if (workers_.variance_spread > 0.0)
      var = draw_uniform(rng, (1.0 - workers_.variance_spread) * s2,
                         (1.0 + workers_.variance_spread) * s2);
    biases_.push_back(bias);
    variances_.push_back(var);
  }
}

double ProblemInstance::worker_bias(int worker) const {
  realize_workers_up_to(worker);
  return biases_[static_cast<size_t>(worker)];
}

double ProblemInstance::worker_variance(int worker) const {
  realize_workers_up_to(worker);
  return variances_[static_cast<size_t>(worker)];
}

ProblemInstance sample_instance(const QualityPrior& prior, const WorkerModel& workers,
                                std::uint64_t seed) {
  return ProblemInstance(prior, workers, seed);
}

namespace {
std::uint64_t pair_key(int object, int worker) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(object)) << 32) |
         static_cast<std::uint32_t>(worker);
}
}  // namespace

AnswerLog::AnswerLog(int n_objects, int o_max) : n_objects_(n_objects), o_max_(o_max) {
  if (n_objects < 1) throw InvalidInstanceError("answer log needs at least one object");
  if (o_max < 1) throw InvalidInstanceError("answer log needs o_max >= 1");
  object_counts_.assign(static_cast<size_t>(n_objects), 0);
}

void AnswerLog::append(const AnswerRecord& rec) {
  if (rec.object < 0 || rec.object >= n_objects_)
    throw InvalidInstanceError("answer references object out of range");
  if (rec.worker < 0) throw InvalidInstanceError("answer references negative worker id");
  if (pair_used(rec.object, rec.worker))
    throw DegenerateAllocationError("object " + std::to_string(rec.object) +
                                    " already evaluated by worker " + std::to_string(rec.worker));
  auto it = worker_counts_.find(rec.worker);
  const int used = it == worker_counts_.end() ? 0 : it->second;
  if (used >= o_max_)
    throw WorkerExhaustedError("worker " + std::to_string(rec.worker) + " already performed " +
                               std::to_string(used) + " evaluations (cap " +
                               std::to_string(o_max_) + ")");
  entries_.push_back(rec);
  ++object_counts_[static_cast<size_t>(rec.object)];
  if (it == worker_counts_.end()) {
    worker_counts_.emplace(rec.worker, 1);
    worker_order_.push_back(rec.worker);
  } else {
    ++it->second;
  }
  used_pairs_.insert(pair_key(rec.object, rec.worker));
}

int AnswerLog::count_for_object(int object) const {
  return object_counts_.at(static_cast<size_t>(object));
}

int AnswerLog::count_for_worker(int worker) const {
  auto it = worker_counts_.find(worker);
  return it == worker_counts_.end() ? 0 : it->second;
}

bool AnswerLog::pair_used(int object, int worker) const {
  return used_pairs_.count(pair_key(object, worker)) != 0;
}

Eigen::MatrixXd AnswerLog::object_allocation_matrix() const {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(total(), n_objects_);
  for (int j = 0; j < total(); ++j) g(j, entries_[static_cast<size_t>(j)].object) = 1.0;
  return g;
}

Eigen::MatrixXd AnswerLog::worker_allocation_matrix() const {
  std::unordered_map<int, int> col;
  col.reserve(worker_order_.size());
  for (size_t i = 0; i < worker_order_.size(); ++i)
    col.emplace(worker_order_[i], static_cast<int>(i));
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(total(), static_cast<int>(worker_order_.size()));
  for (int j = 0; j < total(); ++j)
    g(j, col.at(entries_[static_cast<size_t>(j)].worker)) = 1.0;
  return g;
}

Eigen::VectorXd AnswerLog::reported_values() const {
  Eigen::VectorXd y(total());
  for (int j = 0; j < total(); ++j) y(j) = entries_[static_cast<size_t>(j)].reported;
  return y;
}

double elicit_answer(const ProblemInstance& inst, const AnswerLog& log, int object, int worker,
                     std::mt19937_64& rng) {
  if (object < 0 || object >= inst.n())
    throw InvalidInstanceError("object id out of range in elicit_answer");
  if (log.count_for_worker(worker) >= inst.workers().o_max)
    throw WorkerExhaustedError("worker " + std::to_string(worker) + " has no capacity left");
  if (log.pair_used(object, worker))
    throw DegenerateAllocationError("pair (object " + std::to_string(object) + ", worker " +
                                    std::to_string(worker) + ") already used");
  const double mean = inst.quality(object) + inst.worker_bias(worker);
  return draw_normal(rng, mean, std::sqrt(inst.worker_variance(worker)));
}

}  // namespace crowdscore
