// Independent reference computations for tests. Everything here recomputes
// quantities from first principles (tensor quadrature, brute-force search,
// explicit summation) without touching the library's solver paths.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

/// Gauss-Hermite nodes/weights via the Golub-Welsch eigenvalue method.
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;  // for integrals against exp(-t^2)

  explicit GaussHermite(int n) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
      const double b = std::sqrt(i / 2.0);
      j(i - 1, i) = b;
      j(i, i - 1) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    nodes.resize(static_cast<size_t>(n));
    weights.resize(static_cast<size_t>(n));
    const double sqrt_pi = std::sqrt(M_PI);
    for (int i = 0; i < n; ++i) {
      nodes[static_cast<size_t>(i)] = es.eigenvalues()(i);
      const double v = es.eigenvectors()(0, i);
      weights[static_cast<size_t>(i)] = v * v * sqrt_pi;
    }
  }
};

/// A tiny estimation problem stated directly in terms of the generative
/// model: answers y = x_obj + b_worker + noise with Gaussian priors.
struct TinyProblem {
  int n_objects = 1;
  int n_workers = 0;  // 0 disables the bias block entirely
  double quality_mean = 0.0;
  double quality_std = 1.0;
  double bias_mean = 0.0;
  double bias_std = 1.0;
  double noise_std = 1.0;
  struct Answer {
    int object;
    int worker;  // ignored when n_workers == 0
    double value;
  };
  std::vector<Answer> answers;

  int dim() const { return n_objects + n_workers; }

  /// Log of the unnormalized posterior density at theta = [x; b].
  double log_posterior(const Eigen::VectorXd& theta) const {
    double lp = 0.0;
    for (int i = 0; i < n_objects; ++i) {
      const double z = (theta(i) - quality_mean) / quality_std;
      lp -= 0.5 * z * z;
    }
    for (int w = 0; w < n_workers; ++w) {
      const double z = (theta(n_objects + w) - bias_mean) / bias_std;
      lp -= 0.5 * z * z;
    }
    for (const Answer& a : answers) {
      const double pred =
          theta(a.object) + (n_workers > 0 ? theta(n_objects + a.worker) : 0.0);
      const double z = (a.value - pred) / noise_std;
      lp -= 0.5 * z * z;
    }
    return lp;
  }
};

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

namespace detail {

/// One tensor-product Gauss-Hermite pass over theta = center + sqrt(2) L t.
/// With L diagonal this is an axis-aligned grid; with a triangular L from a
/// covariance estimate the grid follows the mass's principal axes.
inline Moments gh_pass(const TinyProblem& p, const Eigen::VectorXd& center,
                       const Eigen::MatrixXd& transform, const GaussHermite& gh) {
  const int d = p.dim();
  const int n = static_cast<int>(gh.nodes.size());
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(d, d);
  double z_total = 0.0;

  // Per-dimension tables of log w_k + t_k^2; the Jacobian is constant.
  std::vector<double> logw(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k)
    logw[static_cast<size_t>(k)] = std::log(gh.weights[static_cast<size_t>(k)]) +
                                   gh.nodes[static_cast<size_t>(k)] * gh.nodes[static_cast<size_t>(k)];

  Eigen::VectorXd t(d), theta(d);
  const long total = static_cast<long>(std::pow(static_cast<double>(n), d));
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    double log_weight = 0.0;
    for (int j = 0; j < d; ++j) {
      const int k = static_cast<int>(rem % n);
      rem /= n;
      t(j) = gh.nodes[static_cast<size_t>(k)];
      log_weight += logw[static_cast<size_t>(k)];
    }
    theta = center + M_SQRT2 * (transform * t);
    const double term = std::exp(p.log_posterior(theta) + log_weight);
    z_total += term;
    m1 += term * theta;
    m2 += term * (theta * theta.transpose());
  }

  Moments out;
  out.mean = m1 / z_total;
  out.cov = m2 / z_total - out.mean * out.mean.transpose();
  return out;
}

/// Plain Cholesky factor of a symmetric positive-definite matrix.
inline Eigen::MatrixXd cholesky_lower(Eigen::MatrixXd a) {
  const int d = static_cast<int>(a.rows());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j)
        l(i, i) = std::sqrt(std::max(s, 1e-300));
      else
        l(i, j) = s / l(j, j);
    }
  }
  return l;
}

}  // namespace detail

/// Posterior mean/covariance by dense tensor quadrature of the unnormalized
/// posterior. A first pass on prior/data-derived boxes locates the mass, a
/// second re-centers on the estimated moments, and the final passes follow
/// the estimated principal axes so correlated posteriors are integrated on a
/// grid aligned with the mass.
inline Moments posterior_moments(const TinyProblem& p, int nodes = 24) {
  const int d = p.dim();
  const GaussHermite gh(nodes);

  Eigen::VectorXd center(d), scale(d);
  std::vector<int> counts(static_cast<size_t>(p.n_objects), 0);
  std::vector<double> sums(static_cast<size_t>(p.n_objects), 0.0);
  for (const auto& a : p.answers) {
    ++counts[static_cast<size_t>(a.object)];
    sums[static_cast<size_t>(a.object)] += a.value;
  }
  for (int i = 0; i < p.n_objects; ++i) {
    const int c = counts[static_cast<size_t>(i)];
    center(i) = c > 0 ? sums[static_cast<size_t>(i)] / c : p.quality_mean;
    scale(i) = 2.0 * std::min(p.quality_std, p.noise_std / std::sqrt(std::max(1, c))) +
               0.5 * p.noise_std;
  }
  for (int w = 0; w < p.n_workers; ++w) {
    center(p.n_objects + w) = p.bias_mean;
    scale(p.n_objects + w) = 1.5 * p.bias_std + 0.25 * p.noise_std;
  }

  Moments m = detail::gh_pass(p, center, Eigen::MatrixXd(scale.asDiagonal()), gh);
  m = detail::gh_pass(
      p, m.mean, Eigen::MatrixXd((1.2 * m.cov.diagonal().cwiseMax(1e-12).cwiseSqrt()).asDiagonal()),
      gh);
  for (int pass = 0; pass < 2; ++pass)
    m = detail::gh_pass(p, m.mean, detail::cholesky_lower(1.44 * m.cov), gh);
  return m;
}

/// Best two-level quantizer of a density by direct search over the two
/// representatives (midpoint threshold), refined around the best grid point.
struct TwoLevelSearch {
  double w1 = 0.0;
  double w2 = 0.0;
  double mse = 0.0;
};

inline TwoLevelSearch two_level_direct_search(const std::function<double(double)>& pdf, double lo,
                                              double hi, int samples = 200001) {
  // Tabulate trapezoid prefix sums of f, x f, x^2 f once; each candidate
  // quantizer then costs O(1).
  const double dx = (hi - lo) / (samples - 1);
  std::vector<double> c0(static_cast<size_t>(samples), 0.0);
  std::vector<double> c1v(static_cast<size_t>(samples), 0.0);
  std::vector<double> c2(static_cast<size_t>(samples), 0.0);
  double fp = pdf(lo);
  for (int i = 1; i < samples; ++i) {
    const double x = lo + dx * i;
    const double f = pdf(x);
    const double xp = x - dx;
    c0[static_cast<size_t>(i)] = c0[static_cast<size_t>(i) - 1] + 0.5 * dx * (fp + f);
    c1v[static_cast<size_t>(i)] = c1v[static_cast<size_t>(i) - 1] + 0.5 * dx * (xp * fp + x * f);
    c2[static_cast<size_t>(i)] =
        c2[static_cast<size_t>(i) - 1] + 0.5 * dx * (xp * xp * fp + x * x * f);
    fp = f;
  }
  const double mass = c0.back();
  auto below = [&](const std::vector<double>& c, double x) {
    if (x <= lo) return 0.0;
    if (x >= hi) return c.back();
    const double pos = (x - lo) / dx;
    const auto k = static_cast<size_t>(pos);
    const double t = pos - static_cast<double>(k);
    return c[k] + t * (c[k + 1] - c[k]);
  };
  auto mse_of = [&](double w1, double w2) {
    const double boundary = 0.5 * (w1 + w2);
    const double m0a = below(c0, boundary), m1a = below(c1v, boundary), m2a = below(c2, boundary);
    const double m0b = mass - m0a, m1b = c1v.back() - m1a, m2b = c2.back() - m2a;
    const double cell_a = m2a - 2.0 * w1 * m1a + w1 * w1 * m0a;
    const double cell_b = m2b - 2.0 * w2 * m1b + w2 * w2 * m0b;
    return (cell_a + cell_b) / mass;
  };

  TwoLevelSearch best;
  best.mse = std::numeric_limits<double>::infinity();
  const double span = hi - lo;
  double center1 = lo + 0.25 * span, center2 = lo + 0.75 * span;
  double radius = 0.3 * span;
  for (int level = 0; level < 11; ++level) {
    const int steps = 25;
    for (int a = 0; a < steps; ++a) {
      for (int b = 0; b < steps; ++b) {
        const double w1 = center1 - radius + 2.0 * radius * a / (steps - 1);
        const double w2 = center2 - radius + 2.0 * radius * b / (steps - 1);
        if (w1 >= w2) continue;
        const double m = mse_of(w1, w2);
        if (m < best.mse) best = {w1, w2, m};
      }
    }
    center1 = best.w1;
    center2 = best.w2;
    radius *= 0.3;
  }
  return best;
}

}  // namespace oracle
