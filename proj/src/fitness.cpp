#include "crowdscore/fitness.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "crowdscore/rng.hpp"

namespace crowdscore {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Standard normal CDF through erfc, which stays positive far into the tail.
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Index of the largest value among contestants, lowest index on ties.
int argmax_of(const Eigen::VectorXd& values, const std::vector<int>& contestants) {
  int best = contestants.front();
  for (int i : contestants)
    if (values(i) > values(best)) best = i;
  return best;
}

// Win probabilities are undefined for contestants the posterior knows
// nothing about (flat prior, no answers).
void require_identified(const QualityMarginal& m, const std::vector<int>& contestants) {
  for (int i : contestants)
    if (!std::isfinite(m.var(i)) || !std::isfinite(m.mean(i)))
      throw UnderdeterminedError("fitness requested for object " + std::to_string(i) +
                                     " with no posterior information",
                                 "x" + std::to_string(i));
}

}  // namespace

FitnessState FitnessState::from_values(const Eigen::VectorXd& values,
                                       const std::vector<int>& contestants, int n) {
  FitnessState f;
  f.phi = Eigen::VectorXd::Constant(n, kNegInf);
  f.contestants = contestants;
  for (int i : contestants) f.phi(i) = values(i);
  return f;
}

Eigen::VectorXd pi_approx(const QualityMarginal& marginal, const std::vector<int>& contestants) {
  const int n = marginal.n();
  if (contestants.empty()) throw InvalidInstanceError("pi_approx with empty contestant set");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  if (contestants.size() == 1) {
    out(contestants.front()) = 1.0;
    return out;
  }
  require_identified(marginal, contestants);

  // The strongest competitor of i is the contestant with the largest mean
  // other than i, so only the top two means are ever needed.
  int best = -1, second = -1;
  for (int i : contestants) {
    if (best < 0 || marginal.mean(i) > marginal.mean(best)) {
      second = best;
      best = i;
    } else if (second < 0 || marginal.mean(i) > marginal.mean(second)) {
      second = i;
    }
  }

  for (int i : contestants) {
    const int c = (i == best) ? second : best;
    const double d = marginal.mean(i) - marginal.mean(c);
    const double cross = marginal.correlation(i, c) * std::sqrt(marginal.var(i) * marginal.var(c));
    const double v = marginal.var(i) + marginal.var(c) - 2.0 * cross;
    if (v <= 0.0) {
      if (d == 0.0)
        throw DegenerateComparisonError("pairwise comparison between coincident point masses");
      out(i) = d > 0.0 ? 1.0 : 0.0;
      continue;
    }
    out(i) = normal_cdf(d / std::sqrt(v));
  }
  return out;
}

namespace {

Eigen::VectorXd pi_quadrature(const QualityMarginal& m, const std::vector<int>& contestants,
                              const QuadratureMethod& method) {
  const int n = m.n();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  if (contestants.size() == 1) {
    out(contestants.front()) = 1.0;
    return out;
  }
  std::vector<double> sd(contestants.size());
  for (size_t k = 0; k < contestants.size(); ++k) sd[k] = std::sqrt(m.var(contestants[k]));

  for (size_t k = 0; k < contestants.size(); ++k) {
    const int i = contestants[k];
    const double mu_i = m.mean(i);
    const double sd_i = sd[k];

    if (sd_i == 0.0) {
      // Point mass: the win probability is the product of the others' CDFs
      // evaluated at the mass point.
      double p = 1.0;
      for (size_t l = 0; l < contestants.size() && p > 0.0; ++l) {
        if (l == k) continue;
        const int j = contestants[l];
        p *= sd[l] == 0.0 ? (m.mean(j) < mu_i ? 1.0 : 0.0)
                          : normal_cdf((mu_i - m.mean(j)) / sd[l]);
      }
      out(i) = p;
      continue;
    }

    const double lo = mu_i - 10.0 * sd_i;
    const double hi = mu_i + 10.0 * sd_i;

    // Cheap upper bound: everything is bounded by the competitors' CDFs at
    // the top of the integration range.
    double ub = 1.0;
    for (size_t l = 0; l < contestants.size() && ub >= method.negligible; ++l) {
      if (l == k) continue;
      const int j = contestants[l];
      ub *= sd[l] == 0.0 ? (m.mean(j) < hi ? 1.0 : 0.0) : normal_cdf((hi - m.mean(j)) / sd[l]);
    }
    if (ub < method.negligible) {
      out(i) = 0.0;
      continue;
    }

    const double inv_sd = 1.0 / sd_i;
    auto integrand = [&](double x) {
      const double z = (x - mu_i) * inv_sd;
      double val = std::exp(-0.5 * z * z) * inv_sd / std::sqrt(2.0 * M_PI);
      for (size_t l = 0; l < contestants.size() && val != 0.0; ++l) {
        if (l == k) continue;
        const int j = contestants[l];
        val *= sd[l] == 0.0 ? (m.mean(j) < x ? 1.0 : 0.0) : normal_cdf((x - m.mean(j)) / sd[l]);
      }
      return val;
    };
    out(i) = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        integrand, lo, hi, 12, method.abs_tol);
  }
  return out;
}

Eigen::VectorXd pi_monte_carlo(const QualityMarginal& m, const std::vector<int>& contestants,
                               const MonteCarloMethod& method) {
  const int n = m.n();
  const int c = static_cast<int>(contestants.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  if (c == 1) {
    out(contestants.front()) = 1.0;
    return out;
  }

  Eigen::VectorXd mu(c);
  for (int k = 0; k < c; ++k) mu(k) = m.mean(contestants[static_cast<size_t>(k)]);

  // Sampling transform: diagonal scales, or the symmetric square root of the
  // contestant submatrix (eigenvalues clamped at zero for semidefinite input).
  Eigen::MatrixXd transform;
  Eigen::VectorXd scale;
  const bool diagonal = !m.has_correlations();
  if (diagonal) {
    scale.resize(c);
    for (int k = 0; k < c; ++k) scale(k) = std::sqrt(m.var(contestants[static_cast<size_t>(k)]));
  } else {
    Eigen::MatrixXd sub(c, c);
    for (int a = 0; a < c; ++a)
      for (int b = 0; b < c; ++b)
        sub(a, b) = m.cov(contestants[static_cast<size_t>(a)], contestants[static_cast<size_t>(b)]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
    transform = es.eigenvectors() *
                es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }

  auto rng = make_rng(method.seed);
  std::vector<long> wins(static_cast<size_t>(c), 0);
  Eigen::VectorXd z(c), x(c);
  for (int s = 0; s < method.samples; ++s) {
    for (int k = 0; k < c; ++k) z(k) = draw_normal(rng, 0.0, 1.0);
    if (diagonal)
      x = mu + scale.cwiseProduct(z);
    else
      x = mu + transform * z;
    int best = 0;
    for (int k = 1; k < c; ++k)
      if (x(k) > x(best)) best = k;
    ++wins[static_cast<size_t>(best)];
  }
  for (int k = 0; k < c; ++k)
    out(contestants[static_cast<size_t>(k)]) =
        static_cast<double>(wins[static_cast<size_t>(k)]) / method.samples;
  return out;
}

}  // namespace

PiResult pi_exact(const QualityMarginal& marginal, const std::vector<int>& contestants,
                  const PiMethod& method) {
  if (contestants.empty()) throw InvalidInstanceError("pi_exact with empty contestant set");
  if (contestants.size() > 1) require_identified(marginal, contestants);
  PiResult result;
  if (std::holds_alternative<QuadratureMethod>(method)) {
    if (marginal.has_correlations()) {
      // The product-CDF integral is only exact for diagonal covariance.
      result.pi = pi_monte_carlo(marginal, contestants, MonteCarloMethod{});
      result.mc_fallback = true;
    } else {
      result.pi = pi_quadrature(marginal, contestants, std::get<QuadratureMethod>(method));
    }
  } else {
    result.pi = pi_monte_carlo(marginal, contestants, std::get<MonteCarloMethod>(method));
  }
  return result;
}

FitnessState apply_elimination(const Eigen::VectorXd& values, const std::vector<int>& contestants,
                               double pi_th_e, int n) {
  if (!(pi_th_e >= 0.0 && pi_th_e < 1.0))
    throw InvalidInstanceError("elimination threshold must lie in [0, 1)");
  if (contestants.empty()) throw InvalidInstanceError("elimination with empty contestant set");

  const int keep_always = argmax_of(values, contestants);
  FitnessState f;
  f.phi = Eigen::VectorXd::Constant(n, kNegInf);
  for (int i : contestants) {
    if (values(i) > pi_th_e || i == keep_always) {
      f.phi(i) = values(i);
      f.contestants.push_back(i);
    }
  }
  return f;
}

}  // namespace crowdscore
