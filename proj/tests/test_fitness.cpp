#include <doctest.h>

#include <cmath>
#include <random>

#include "crowdscore/fitness.hpp"

using namespace crowdscore;

namespace {

QualityMarginal diag_marginal(std::vector<double> mean, std::vector<double> var) {
  QualityMarginal m;
  m.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<long>(mean.size()));
  m.var = Eigen::Map<Eigen::VectorXd>(var.data(), static_cast<long>(var.size()));
  return m;
}

std::vector<int> everyone(int n) {
  std::vector<int> c(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) c[static_cast<size_t>(i)] = i;
  return c;
}

}  // namespace

TEST_SUITE_BEGIN("fitness");

TEST_CASE("pairwise surrogate on symmetric two-object posteriors") {
  const auto m = diag_marginal({0.3, 0.3}, {0.2, 0.2});
  const Eigen::VectorXd pi = pi_approx(m, everyone(2));
  CHECK(pi(0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pi(1) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("pairwise surrogate equals the normal CDF of the standardized gap") {
  // means (1, 0), variances (1/2, 1/2): the gap is one combined std.
  const auto m = diag_marginal({1.0, 0.0}, {0.5, 0.5});
  const Eigen::VectorXd pi = pi_approx(m, everyone(2));
  CHECK(pi(0) == doctest::Approx(0.8413447460685429).epsilon(1e-12));
  CHECK(pi(1) == doctest::Approx(1.0 - 0.8413447460685429).epsilon(1e-12));
}

TEST_CASE("pairwise surrogate separates cleanly as variances vanish") {
  const auto m = diag_marginal({3.0, 2.0, 1.0}, {1e-8, 1e-8, 1e-8});
  const Eigen::VectorXd pi = pi_approx(m, everyone(3));
  CHECK(pi(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pi(1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pi(2) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pi(1) >= 0.0);
  CHECK(pi(2) >= 0.0);
}

TEST_CASE("coincident point masses cannot be compared") {
  const auto tied = diag_marginal({0.5, 0.5}, {0.0, 0.0});
  CHECK_THROWS_AS((void)pi_approx(tied, everyone(2)), DegenerateComparisonError);
  const auto split = diag_marginal({0.7, 0.5}, {0.0, 0.0});
  const Eigen::VectorXd pi = pi_approx(split, everyone(2));
  CHECK(pi(0) == 1.0);
  CHECK(pi(1) == 0.0);
}

TEST_CASE("exact win probability of a lone contestant is one") {
  const auto m = diag_marginal({0.0, 1.0, 2.0}, {1.0, 1.0, 1.0});
  const PiResult r = pi_exact(m, {1}, QuadratureMethod{});
  CHECK(r.pi(1) == 1.0);
  CHECK(r.pi(0) == 0.0);
  CHECK_FALSE(r.mc_fallback);
}

TEST_CASE("exact equals approximate for two contestants") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const auto m = diag_marginal({2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0},
                                 {0.05 + unit(rng), 0.05 + unit(rng)});
    const Eigen::VectorXd approx = pi_approx(m, everyone(2));
    const PiResult exact = pi_exact(m, everyone(2), QuadratureMethod{1e-12, 0.0});
    CHECK(exact.pi(0) == doctest::Approx(approx(0)).epsilon(1e-10));
    CHECK(exact.pi(1) == doctest::Approx(approx(1)).epsilon(1e-10));
  }
}

TEST_CASE("three symmetric contestants split the win probability evenly") {
  const auto m = diag_marginal({0.4, 0.4, 0.4}, {0.3, 0.3, 0.3});
  const PiResult q = pi_exact(m, everyone(3), QuadratureMethod{});
  for (int i = 0; i < 3; ++i) CHECK(q.pi(i) == doctest::Approx(1.0 / 3).epsilon(1e-8));

  const PiResult mc = pi_exact(m, everyone(3), MonteCarloMethod{200000, 99});
  const double se = std::sqrt((1.0 / 3) * (2.0 / 3) / 200000.0);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(mc.pi(i) - 1.0 / 3) < 3.0 * se);
}

TEST_CASE("correlated covariance makes quadrature fall back to Monte Carlo") {
  QualityMarginal m = diag_marginal({0.0, 0.1}, {1.0, 1.0});
  m.cov = Eigen::MatrixXd(2, 2);
  m.cov << 1.0, 0.6, 0.6, 1.0;
  const PiResult r = pi_exact(m, everyone(2), QuadratureMethod{});
  CHECK(r.mc_fallback);
  CHECK(r.pi.sum() == doctest::Approx(1.0));
  // With strong positive correlation the comparison variance shrinks, so the
  // leader is more certain than under independence.
  const Eigen::VectorXd indep = pi_approx(m.diagonal_copy(), everyone(2));
  const Eigen::VectorXd corr = pi_approx(m, everyone(2));
  CHECK(corr(1) > indep(1));
}

TEST_CASE("the surrogate dominates the exact win probability") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 3 + static_cast<int>(unit(rng) * 6);  // 3..8
    std::vector<double> mu(static_cast<size_t>(n)), var(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      mu[static_cast<size_t>(i)] = -2.0 + 4.0 * unit(rng);
      var[static_cast<size_t>(i)] = 0.05 + 2.0 * unit(rng);
    }
    const auto m = diag_marginal(mu, var);
    const Eigen::VectorXd approx = pi_approx(m, everyone(n));
    const PiResult exact = pi_exact(m, everyone(n), QuadratureMethod{1e-10, 1e-14});
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      CHECK(approx(i) >= exact.pi(i) - 1e-9);
      total += exact.pi(i);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("raising a mean never lowers its surrogate fitness") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 3 + static_cast<int>(unit(rng) * 4);
    std::vector<double> mu(static_cast<size_t>(n)), var(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      mu[static_cast<size_t>(i)] = -1.0 + 2.0 * unit(rng);
      var[static_cast<size_t>(i)] = 0.1 + unit(rng);
    }
    const int target = static_cast<int>(unit(rng) * n);
    const auto before = pi_approx(diag_marginal(mu, var), everyone(n));
    mu[static_cast<size_t>(target)] += 0.1 + unit(rng);
    const auto after = pi_approx(diag_marginal(mu, var), everyone(n));
    CHECK(after(target) >= before(target) - 1e-12);
  }
}

TEST_CASE("Monte Carlo agrees with quadrature on diagonal posteriors") {
  const auto m = diag_marginal({0.9, 0.6, 0.0, -0.4}, {0.4, 0.5, 0.3, 0.6});
  const PiResult q = pi_exact(m, everyone(4), QuadratureMethod{1e-10, 0.0});
  const int samples = 200000;
  const PiResult mc = pi_exact(m, everyone(4), MonteCarloMethod{samples, 123});
  for (int i = 0; i < 4; ++i) {
    const double se = std::sqrt(std::max(q.pi(i) * (1 - q.pi(i)), 1e-12) / samples);
    CHECK(std::abs(mc.pi(i) - q.pi(i)) < 4.0 * se);
  }
}

TEST_CASE("elimination keeps survivors above the threshold") {
  Eigen::VectorXd values(3);
  values << 0.9, 0.05, 0.05;
  const FitnessState f = apply_elimination(values, everyone(3), 0.1, 3);
  CHECK(f.contestants == std::vector<int>{0});
  CHECK(f.phi(0) == doctest::Approx(0.9));
  CHECK(std::isinf(f.phi(1)));
  CHECK(f.phi(1) < 0);
  CHECK(std::isinf(f.phi(2)));
}

TEST_CASE("a zero threshold never eliminates anyone") {
  Eigen::VectorXd values(4);
  values << 0.4, 0.3, 0.2, 0.1;
  const FitnessState f = apply_elimination(values, everyone(4), 0.0, 4);
  CHECK(f.contestants.size() == 4);
}

TEST_CASE("a vanishing contender is dropped while close rivals stay") {
  Eigen::VectorXd values(3);
  values << 0.5, 0.5, 1e-6;
  const FitnessState f = apply_elimination(values, everyone(3), 1e-3, 3);
  CHECK(f.contestants == std::vector<int>{0, 1});
}

TEST_CASE("the current best survives even below the threshold") {
  Eigen::VectorXd values(3);
  values << 0.05, 0.08, 0.02;
  const FitnessState f = apply_elimination(values, everyone(3), 0.5, 3);
  CHECK(f.contestants == std::vector<int>{1});
  CHECK(f.phi(1) == doctest::Approx(0.08));
}

TEST_CASE("elimination respects an already shrunken contestant set") {
  Eigen::VectorXd values(4);
  values << 0.9, 0.8, 0.7, 0.6;
  const FitnessState f = apply_elimination(values, {1, 3}, 0.65, 4);
  CHECK(f.contestants == std::vector<int>{1});  // object 3 is at 0.6 <= 0.65
  CHECK(std::isinf(f.phi(0)));                  // never was a contestant here
}

TEST_SUITE_END();
