#pragma once

#include <Eigen/Dense>
#include <unordered_map>
#include <vector>

#include "crowdscore/model.hpp"

namespace crowdscore {

/// Priors the estimator assumes over qualities and worker biases.
/// An infinite standard deviation means "unknown" and contributes nothing
/// to the information matrix. bias_std == 0 means the bias is known exactly
/// (equal to bias_mean) and is subtracted from answers instead of estimated.
struct PriorSpec {
  double quality_mean = 0.0;
  double quality_std = kInf;
  double bias_mean = 0.0;
  double bias_std = 0.0;

  bool estimates_bias() const { return bias_std > 0.0; }

  /// Default estimator knowledge for a generative prior: Gaussian priors are
  /// known to the estimator, lattice or unknown priors are treated as flat.
  static PriorSpec for_quality_prior(const QualityPrior& prior);
};

/// Mean and covariance of the quality block of the joint posterior.
struct QualityMarginal {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  /// Full N x N covariance; left empty when the posterior carries no
  /// cross-object correlations (pure quality model).
  Eigen::MatrixXd cov;

  bool has_correlations() const { return cov.size() != 0; }
  double correlation(int i, int j) const;
  /// Copy with correlations dropped (diagonal covariance).
  QualityMarginal diagonal_copy() const;
  int n() const { return static_cast<int>(mean.size()); }
};

/// Joint Gaussian posterior over [qualities; enrolled worker biases], the
/// conjugate update of a Gaussian prior with the linear-Gaussian answer
/// model. Workers enroll on first appearance, appending a fresh prior block.
///
/// Three internal representations, picked at construction:
///  - pure quality model: the information matrix is diagonal, updates O(1);
///  - bias model with any infinite prior: dense information form, solved on
///    demand with a guarded LDLT factorization;
///  - bias model with all-finite priors: mean/covariance form with scalar
///    measurement updates, O(n^2) per answer and never refactorized.
/// All three agree to numerical tolerance; tests cross-check them against
/// the one-shot normal-equations route (`from_log`).
class GaussianPosterior {
 public:
  GaussianPosterior(const PriorSpec& prior, int n_objects, double noise_var);

  /// Folds in one reported answer.
  void add_answer(int object, int worker, double value);
  /// Folds in a log slice [first_entry, end).
  void update(const AnswerLog& log, int first_entry = 0);

  /// Batch route: stacks the full allocation matrix and applies the
  /// closed-form normal-equations update in one shot.
  static GaussianPosterior from_log(const PriorSpec& prior, int n_objects, double noise_var,
                                    const AnswerLog& log);

  int n_objects() const { return n_; }
  int n_workers() const { return static_cast<int>(worker_ids_.size()); }
  int dim() const { return n_ + n_workers(); }
  bool estimates_bias() const { return model_bias_; }
  double noise_var() const { return noise_var_; }
  const PriorSpec& prior() const { return prior_; }
  int answers_seen() const { return answers_seen_; }

  /// Posterior mean over [qualities; biases] (MMSE estimate).
  Eigen::VectorXd mean() const;
  /// Posterior covariance over [qualities; biases].
  Eigen::MatrixXd covariance() const;
  /// Quality block of mean/covariance, the input to fitness computation.
  QualityMarginal quality_marginal() const;

 private:
  enum class Form { kDiagonal, kInformation, kCovariance };

  int worker_slot(int worker_id);
  void enroll_worker();
  void solve_information() const;
  std::string describe_null_space() const;

  PriorSpec prior_;
  int n_ = 0;
  double noise_var_ = 1.0;
  bool model_bias_ = false;
  Form form_ = Form::kDiagonal;
  int answers_seen_ = 0;

  std::unordered_map<int, int> worker_slots_;
  std::vector<int> worker_ids_;

  // kDiagonal: per-object information and information-weighted sums.
  Eigen::VectorXd j_diag_;
  Eigen::VectorXd h_diag_;

  // kInformation: J = Gamma' Gamma / s^2 + prior precision, h likewise.
  Eigen::MatrixXd info_;
  Eigen::VectorXd info_rhs_;
  mutable bool cache_valid_ = false;
  mutable Eigen::VectorXd mean_cache_;
  mutable Eigen::MatrixXd cov_cache_;

  // kCovariance: running mean and covariance.
  Eigen::VectorXd mean_state_;
  Eigen::MatrixXd cov_state_;
};

}  // namespace crowdscore
