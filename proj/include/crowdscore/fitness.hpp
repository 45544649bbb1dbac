#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <variant>
#include <vector>

#include "crowdscore/posterior.hpp"

namespace crowdscore {

/// Per-object fitness values; -inf marks objects out of the contest.
struct FitnessState {
  Eigen::VectorXd phi;
  std::vector<int> contestants;  // ascending ids with finite phi

  static FitnessState from_values(const Eigen::VectorXd& values,
                                  const std::vector<int>& contestants, int n);
  int n() const { return static_cast<int>(phi.size()); }
};

/// Probability that each contestant beats its single strongest competitor
/// (the pairwise surrogate of the max probability). Closed form from the
/// marginal means, variances and pairwise correlation. Returns a length-N
/// vector, zero outside the contestant set.
Eigen::VectorXd pi_approx(const QualityMarginal& marginal, const std::vector<int>& contestants);

struct QuadratureMethod {
  /// Target absolute error of each win-probability integral.
  double abs_tol = 1e-10;
  /// Objects whose win probability is provably below this are reported as 0
  /// without integrating; keeps long sweeps cheap.
  double negligible = 1e-12;
};
struct MonteCarloMethod {
  int samples = 100000;
  std::uint64_t seed = 0x51ab5eedULL;
};
using PiMethod = std::variant<QuadratureMethod, MonteCarloMethod>;

struct PiResult {
  Eigen::VectorXd pi;  // length N, zero outside the contestant set
  /// True when a quadrature request had to fall back to Monte Carlo because
  /// the marginal carries cross-object correlations.
  bool mc_fallback = false;
};

/// Probability of each contestant being the top-quality object given the
/// current marginal. The product-CDF quadrature route is exact for diagonal
/// covariances; correlated marginals are handled by Monte Carlo.
PiResult pi_exact(const QualityMarginal& marginal, const std::vector<int>& contestants,
                  const PiMethod& method);

/// Elimination rule: contestants whose value is at or below the threshold
/// leave the contest (fitness -inf), except that the current best value is
/// always kept so the contest stays decidable.
FitnessState apply_elimination(const Eigen::VectorXd& values, const std::vector<int>& contestants,
                               double pi_th_e, int n);

}  // namespace crowdscore
