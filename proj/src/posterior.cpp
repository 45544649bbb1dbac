#include "crowdscore/posterior.hpp"

#include <cmath>
#include <sstream>

namespace crowdscore {

namespace {
constexpr double kConditionLimit = 1e12;

double prior_precision(double stddev) {
  if (std::isinf(stddev)) return 0.0;
  return 1.0 / (stddev * stddev);
}
}  // namespace

PriorSpec PriorSpec::for_quality_prior(const QualityPrior& prior) {
  PriorSpec s;
  if (prior.kind == QualityKind::kGaussian) {
    s.quality_mean = prior.mean;
    s.quality_std = prior.stddev;
  } else {
    s.quality_mean = 0.0;
    s.quality_std = kInf;
  }
  return s;
}

double QualityMarginal::correlation(int i, int j) const {
  if (i == j) return 1.0;
  if (!has_correlations()) return 0.0;
  const double denom = std::sqrt(var(i) * var(j));
  if (denom == 0.0) return 0.0;
  return cov(i, j) / denom;
}

QualityMarginal QualityMarginal::diagonal_copy() const {
  QualityMarginal m;
  m.mean = mean;
  m.var = var;
  return m;
}

GaussianPosterior::GaussianPosterior(const PriorSpec& prior, int n_objects, double noise_var)
    : prior_(prior), n_(n_objects), noise_var_(noise_var) {
  if (n_objects < 1) throw InvalidInstanceError("posterior needs at least one object");
  if (!(noise_var > 0.0)) throw InvalidInstanceError("posterior needs noise_var > 0");
  if (prior_.quality_std < 0.0 || prior_.bias_std < 0.0)
    throw InvalidInstanceError("prior standard deviations must be >= 0");

  model_bias_ = prior_.estimates_bias();
  const double jq = prior_precision(prior_.quality_std);
  if (!model_bias_) {
    form_ = Form::kDiagonal;
    j_diag_ = Eigen::VectorXd::Constant(n_, jq);
    h_diag_ = Eigen::VectorXd::Constant(n_, jq * prior_.quality_mean);
  } else if (std::isinf(prior_.quality_std) || std::isinf(prior_.bias_std)) {
    form_ = Form::kInformation;
    info_ = Eigen::MatrixXd::Zero(n_, n_);
    info_.diagonal().setConstant(jq);
    info_rhs_ = Eigen::VectorXd::Constant(n_, jq * prior_.quality_mean);
  } else {
    form_ = Form::kCovariance;
    mean_state_ = Eigen::VectorXd::Constant(n_, prior_.quality_mean);
    cov_state_ = Eigen::MatrixXd::Zero(n_, n_);
    cov_state_.diagonal().setConstant(prior_.quality_std * prior_.quality_std);
  }
}

int GaussianPosterior::worker_slot(int worker_id) {
  auto it = worker_slots_.find(worker_id);
  if (it != worker_slots_.end()) return it->second;
  const int slot = n_workers();
  worker_slots_.emplace(worker_id, slot);
  worker_ids_.push_back(worker_id);
  enroll_worker();
  return slot;
}

void GaussianPosterior::enroll_worker() {
  const int d = dim();
  if (form_ == Form::kInformation) {
    info_.conservativeResize(d, d);
    info_.row(d - 1).setZero();
    info_.col(d - 1).setZero();
    info_(d - 1, d - 1) = prior_precision(prior_.bias_std);
    info_rhs_.conservativeResize(d);
    info_rhs_(d - 1) = prior_precision(prior_.bias_std) * prior_.bias_mean;
    cache_valid_ = false;
  } else if (form_ == Form::kCovariance) {
    cov_state_.conservativeResize(d, d);
    cov_state_.row(d - 1).setZero();
    cov_state_.col(d - 1).setZero();
    cov_state_(d - 1, d - 1) = prior_.bias_std * prior_.bias_std;
    mean_state_.conservativeResize(d);
    mean_state_(d - 1) = prior_.bias_mean;
  }
}

void GaussianPosterior::add_answer(int object, int worker, double value) {
  if (object < 0 || object >= n_)
    throw InvalidInstanceError("answer references object outside [0, N)");
  if (worker < 0) throw InvalidInstanceError("answer references negative worker id");
  ++answers_seen_;
  const double inv = 1.0 / noise_var_;

  if (!model_bias_) {
    // Known (possibly zero) bias: subtract it and update the object cell.
    const double y = value - prior_.bias_mean;
    j_diag_(object) += inv;
    h_diag_(object) += y * inv;
    return;
  }

  const int slot = worker_slot(worker);
  const int k = n_ + slot;
  if (form_ == Form::kInformation) {
    info_(object, object) += inv;
    info_(k, k) += inv;
    info_(object, k) += inv;
    info_(k, object) += inv;
    info_rhs_(object) += value * inv;
    info_rhs_(k) += value * inv;
    cache_valid_ = false;
  } else {
    // Scalar measurement update for y = x_i + b_w + noise.
    Eigen::VectorXd c = cov_state_.col(object) + cov_state_.col(k);
    const double s = noise_var_ + c(object) + c(k);
    const double resid = value - mean_state_(object) - mean_state_(k);
    mean_state_ += c * (resid / s);
    cov_state_ -= (c * c.transpose()) / s;
  }
}

void GaussianPosterior::update(const AnswerLog& log, int first_entry) {
  const auto& entries = log.entries();
  for (size_t j = static_cast<size_t>(first_entry); j < entries.size(); ++j)
    add_answer(entries[j].object, entries[j].worker, entries[j].reported);
}

GaussianPosterior GaussianPosterior::from_log(const PriorSpec& prior, int n_objects,
                                              double noise_var, const AnswerLog& log) {
  GaussianPosterior post(prior, n_objects, noise_var);
  if (!post.model_bias_) {
    // The pure quality model has no stacking to exploit; fold answers with
    // the reported bias mean removed (same closed form, diagonal system).
    post.update(log);
    return post;
  }

  // Force the information representation and fill it from the stacked
  // allocation matrices in one shot.
  post.form_ = Form::kInformation;
  for (int w : log.worker_order()) {
    post.worker_slots_.emplace(w, post.n_workers());
    post.worker_ids_.push_back(w);
  }
  const int d = n_objects + log.workers_used();
  const Eigen::MatrixXd gamma_x = log.object_allocation_matrix();
  const Eigen::MatrixXd gamma_b = log.worker_allocation_matrix();
  Eigen::MatrixXd gamma(log.total(), d);
  gamma << gamma_x, gamma_b;
  const Eigen::VectorXd y = log.reported_values();

  Eigen::VectorXd prior_prec(d);
  Eigen::VectorXd prior_mean(d);
  prior_prec.head(n_objects).setConstant(prior_precision(prior.quality_std));
  prior_prec.tail(log.workers_used()).setConstant(prior_precision(prior.bias_std));
  prior_mean.head(n_objects).setConstant(prior.quality_mean);
  prior_mean.tail(log.workers_used()).setConstant(prior.bias_mean);

  post.info_ = gamma.transpose() * gamma / noise_var;
  post.info_.diagonal() += prior_prec;
  post.info_rhs_ = gamma.transpose() * y / noise_var;
  post.info_rhs_ += prior_prec.cwiseProduct(prior_mean);
  post.answers_seen_ = log.total();
  post.cache_valid_ = false;
  return post;
}

std::string GaussianPosterior::describe_null_space() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info_);
  std::ostringstream out;
  const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
  bool first = true;
  for (int k = 0; k < es.eigenvalues().size(); ++k) {
    if (es.eigenvalues()(k) > lmax * 1e-12) continue;
    if (!first) out << "; ";
    first = false;
    out << "[";
    bool any = false;
    for (int j = 0; j < dim(); ++j) {
      const double v = es.eigenvectors()(j, k);
      if (std::abs(v) < 0.3) continue;
      if (any) out << (v > 0 ? " + " : " - ");
      else if (v < 0) out << "-";
      any = true;
      if (j < n_) out << "x" << j;
      else out << "b" << worker_ids_[static_cast<size_t>(j - n_)];
    }
    out << "]";
  }
  return out.str();
}

void GaussianPosterior::solve_information() const {
  if (cache_valid_) return;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info_);
  bool bad = ldlt.info() != Eigen::Success;
  if (!bad) {
    const Eigen::VectorXd d = ldlt.vectorD();
    const double dmax = d.maxCoeff();
    const double dmin = d.minCoeff();
    bad = !(dmin > 0.0) || dmax / dmin > kConditionLimit;
  }
  if (bad) {
    const std::string ns = describe_null_space();
    throw UnderdeterminedError(
        "posterior information matrix is singular or ill-conditioned; unidentified directions: " +
            (ns.empty() ? std::string("<numerical>") : ns),
        ns);
  }
  mean_cache_ = ldlt.solve(info_rhs_);
  cov_cache_ = ldlt.solve(Eigen::MatrixXd::Identity(dim(), dim()));
  cache_valid_ = true;
}

Eigen::VectorXd GaussianPosterior::mean() const {
  switch (form_) {
    case Form::kDiagonal: {
      Eigen::VectorXd m(n_);
      for (int i = 0; i < n_; ++i) {
        if (j_diag_(i) <= 0.0)
          throw UnderdeterminedError(
              "object " + std::to_string(i) + " has a flat prior and no answers", "x" +
                  std::to_string(i));
        m(i) = h_diag_(i) / j_diag_(i);
      }
      return m;
    }
    case Form::kInformation:
      solve_information();
      return mean_cache_;
    case Form::kCovariance:
      return mean_state_;
  }
  return {};
}

Eigen::MatrixXd GaussianPosterior::covariance() const {
  switch (form_) {
    case Form::kDiagonal: {
      Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n_, n_);
      for (int i = 0; i < n_; ++i) {
        if (j_diag_(i) <= 0.0)
          throw UnderdeterminedError(
              "object " + std::to_string(i) + " has a flat prior and no answers", "x" +
                  std::to_string(i));
        c(i, i) = 1.0 / j_diag_(i);
      }
      return c;
    }
    case Form::kInformation:
      solve_information();
      return cov_cache_;
    case Form::kCovariance:
      return cov_state_;
  }
  return {};
}

QualityMarginal GaussianPosterior::quality_marginal() const {
  QualityMarginal m;
  switch (form_) {
    case Form::kDiagonal: {
      m.mean.resize(n_);
      m.var.resize(n_);
      for (int i = 0; i < n_; ++i) {
        if (j_diag_(i) <= 0.0) {
          // Unidentified under a flat prior; marked with infinite variance so
          // the fitness layer rejects it only if it is actually queried.
          m.mean(i) = prior_.quality_mean;
          m.var(i) = kInf;
          continue;
        }
        m.mean(i) = h_diag_(i) / j_diag_(i);
        m.var(i) = 1.0 / j_diag_(i);
      }
      return m;
    }
    case Form::kInformation: {
      solve_information();
      m.mean = mean_cache_.head(n_);
      m.cov = cov_cache_.topLeftCorner(n_, n_);
      m.var = m.cov.diagonal();
      return m;
    }
    case Form::kCovariance: {
      m.mean = mean_state_.head(n_);
      m.cov = cov_state_.topLeftCorner(n_, n_);
      m.var = m.cov.diagonal();
      return m;
    }
  }
  return m;
}

}  // namespace crowdscore
