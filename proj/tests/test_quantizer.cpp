#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "crowdscore/quantizer.hpp"
#include "support/oracles.hpp"

using namespace crowdscore;

namespace {
double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}
}  // namespace

TEST_SUITE_BEGIN("quantizer");

TEST_CASE("rank-1 of a single draw is the prior itself") {
  const auto prior = ScalarPrior::gaussian(0.3, 1.2);
  for (double x : {-2.0, -0.5, 0.3, 1.0, 2.5})
    CHECK(order_statistic_pdf(prior, 1, 1, x) == doctest::Approx(prior.pdf(x)).epsilon(1e-12));
}

TEST_CASE("max of two uniforms has density 2x") {
  const auto prior = ScalarPrior::uniform(0.0, 1.0);
  for (double x : {0.1, 0.25, 0.5, 0.75, 0.9})
    CHECK(order_statistic_pdf(prior, 1, 2, x) == doctest::Approx(2.0 * x).epsilon(1e-12));
  CHECK(order_statistic_pdf(prior, 2, 2, 0.25) == doctest::Approx(2.0 * 0.75).epsilon(1e-12));
  CHECK_THROWS_AS(order_statistic_pdf(prior, 0, 2, 0.5), InvalidInstanceError);
  CHECK_THROWS_AS(order_statistic_pdf(prior, 3, 2, 0.5), InvalidInstanceError);
}

TEST_CASE("max-of-256 density mean matches an empirical maximum") {
  const double sa = 3.0;
  const auto prior = ScalarPrior::gaussian(0.0, sa);
  const GridDensity d = GridDensity::from_function(
      [&](double x) { return order_statistic_pdf(prior, 1, 256, x); }, -8.0 * sa, 8.0 * sa, 8192);
  CHECK(d.total_mass() == doctest::Approx(1.0).epsilon(1e-8));

  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, sa);
  const int trials = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int t = 0; t < trials; ++t) {
    double best = -1e30;
    for (int i = 0; i < 256; ++i) best = std::max(best, g(rng));
    sum += best;
    sumsq += best * best;
  }
  const double emp_mean = sum / trials;
  const double emp_sd = std::sqrt(sumsq / trials - emp_mean * emp_mean);
  const double se = emp_sd / std::sqrt(static_cast<double>(trials));
  CHECK(std::abs(d.mean() - emp_mean) < 4.0 * se);
}

TEST_CASE("one-level design returns the density mean") {
  const GridDensity d = GridDensity::from_function(std_normal_pdf, -10.0, 10.0, 8192);
  const LloydResult r = lloyd_design(d, 1);
  REQUIRE(r.spec.levels() == 1);
  CHECK(r.spec.representatives[0] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("two-level design of a standard Gaussian hits the known fixed point") {
  const GridDensity d = GridDensity::from_function(std_normal_pdf, -10.0, 10.0, 16384);
  const LloydResult r = lloyd_design(d, 2, 1e-12);
  REQUIRE(r.spec.levels() == 2);
  const double expected = std::sqrt(2.0 / std::numbers::pi);  // 0.7978845608...
  CHECK(r.spec.representatives[0] == doctest::Approx(-expected).epsilon(2e-5));
  CHECK(r.spec.representatives[1] == doctest::Approx(expected).epsilon(2e-5));
  CHECK(r.spec.thresholds[1] == doctest::Approx(0.0).epsilon(1e-6));

  // Brute-force search over both representatives lands on the same design.
  const auto search = oracle::two_level_direct_search(std_normal_pdf, -8.0, 8.0, 8001);
  CHECK(std::abs(r.spec.representatives[0] - search.w1) < 1e-4);
  CHECK(std::abs(r.spec.representatives[1] - search.w2) < 1e-4);
}

TEST_CASE("weighted rank blends generalize the generic and top-only densities") {
  AnswerDensityConfig cfg;
  cfg.n_objects = 12;
  cfg.quality = ScalarPrior::gaussian(0.0, 2.0);
  cfg.noise_std = 0.7;
  cfg.grid_points = 2048;

  cfg.dist = AnswerDist::kGeneric;
  const GridDensity generic = answer_density(cfg);
  cfg.dist = AnswerDist::kWeighted;
  cfg.gamma = 1.0;  // equal weights
  const GridDensity blended = answer_density(cfg);
  REQUIRE(generic.size() == blended.size());
  for (int k = 0; k < generic.size(); k += 16)
    CHECK(std::abs(generic.value_at(k) - blended.value_at(k)) < 1e-8);

  cfg.dist = AnswerDist::kTopOnly;
  const GridDensity top = answer_density(cfg);
  cfg.dist = AnswerDist::kWeighted;
  cfg.gamma = 1e-13;  // all weight on the best rank
  const GridDensity near_top = answer_density(cfg);
  for (int k = 0; k < top.size(); k += 16)
    CHECK(std::abs(top.value_at(k) - near_top.value_at(k)) < 1e-8);
}

TEST_CASE("lattice qualities yield a Gaussian mixture answer density") {
  AnswerDensityConfig cfg;
  cfg.n_objects = 2;
  cfg.quality = std::vector<double>{-1.0, 1.0};
  cfg.noise_std = 0.5;
  cfg.dist = AnswerDist::kGeneric;
  cfg.grid_points = 4096;
  const GridDensity d = answer_density(cfg);
  CHECK(d.total_mass() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(d.mean() == doctest::Approx(0.0).epsilon(1e-9));
  // Peak near each lattice point is half a scaled normal peak.
  const double expect_peak = 0.5 / (0.5 * std::sqrt(2.0 * std::numbers::pi));
  double at_one = 0.0;
  for (int k = 0; k < d.size(); ++k)
    if (std::abs(d.grid_lo() + k * d.step() - 1.0) < d.step()) at_one = d.value_at(k);
  CHECK(at_one == doctest::Approx(expect_peak).epsilon(1e-3));
}

TEST_CASE("Lloyd distortion never increases across iterations") {
  AnswerDensityConfig cfg;
  cfg.n_objects = 256;
  cfg.quality = ScalarPrior::gaussian(0.0, 3.0);
  cfg.noise_std = 1.0;
  for (AnswerDist dist : {AnswerDist::kGeneric, AnswerDist::kTopOnly, AnswerDist::kWeighted}) {
    cfg.dist = dist;
    const GridDensity d = answer_density(cfg);
    const LloydResult r = lloyd_design(d, 8, 1e-10, 1000);
    REQUIRE(r.mse_history.size() > 1);
    for (size_t k = 1; k < r.mse_history.size(); ++k)
      CHECK(r.mse_history[k] <= r.mse_history[k - 1] + 1e-12);
    CHECK(r.converged);
  }
}

TEST_CASE("converged representatives satisfy the centroid condition") {
  const GridDensity d = GridDensity::from_function(std_normal_pdf, -10.0, 10.0, 8192);
  const LloydResult r = lloyd_design(d, 6, 1e-11);
  for (int l = 0; l < 6; ++l) {
    const double a = std::max(r.spec.thresholds[static_cast<size_t>(l)], d.grid_lo());
    const double b = std::min(r.spec.thresholds[static_cast<size_t>(l) + 1], d.grid_hi());
    const double m0 = d.mass_between(a, b);
    const double m1 = d.moment1_below(b) - d.moment1_below(a);
    CHECK(r.spec.representatives[static_cast<size_t>(l)] ==
          doctest::Approx(m1 / m0).epsilon(1e-7));
  }
}

TEST_CASE("a well-designed blend beats the uniform quantizer on its density") {
  AnswerDensityConfig cfg;
  cfg.n_objects = 256;
  cfg.quality = ScalarPrior::gaussian(0.0, 3.0);
  cfg.noise_std = 1.0;
  cfg.dist = AnswerDist::kWeighted;
  cfg.gamma = 0.5;
  const GridDensity d = answer_density(cfg);
  const LloydResult lloyd = lloyd_design(d, 32);
  const double sd = std::sqrt(std::max(
      1e-12, (d.moment2_below(d.grid_hi()) / d.total_mass()) - d.mean() * d.mean()));
  const QuantizerSpec uniform = uniform_design(d.mean() - 4.0 * sd, d.mean() + 4.0 * sd, 32);
  CHECK(d.mse(lloyd.spec) < d.mse(uniform));
}

TEST_CASE("bimodal densities converge through cell repair") {
  const GridDensity d = GridDensity::from_function(
      [](double x) {
        return 0.5 * std_normal_pdf((x + 6.0) / 0.2) / 0.2 +
               0.5 * std_normal_pdf((x - 6.0) / 0.2) / 0.2;
      },
      -8.0, 8.0, 8192);
  const LloydResult r = lloyd_design(d, 8, 1e-10, 500);
  CHECK_NOTHROW(r.spec.validate());
  for (size_t k = 1; k < r.mse_history.size(); ++k)
    CHECK(r.mse_history[k] <= r.mse_history[k - 1] + 1e-12);
}

TEST_CASE("uniform two-level design on [-1, 1]") {
  const QuantizerSpec q = uniform_design(-1.0, 1.0, 2);
  CHECK(std::isinf(q.thresholds[0]));
  CHECK(q.thresholds[1] == doctest::Approx(0.0));
  CHECK(std::isinf(q.thresholds[2]));
  CHECK(q.representatives[0] == doctest::Approx(-0.5));
  CHECK(q.representatives[1] == doctest::Approx(0.5));
}

TEST_CASE("32 uniform levels over the widened score range") {
  const double sigma = 1.0 / 15.0;
  const QuantizerSpec q = uniform_design(-1.0 - 2.0 * sigma, 1.0 + 2.0 * sigma, 32);
  const double width = (2.0 + 4.0 * sigma) / 32.0;
  for (int l = 0; l + 1 < 32; ++l)
    CHECK(q.representatives[static_cast<size_t>(l) + 1] -
              q.representatives[static_cast<size_t>(l)] ==
          doctest::Approx(width).epsilon(1e-12));
}

TEST_CASE("representatives are fixed points of quantization") {
  const QuantizerSpec q = uniform_design(-2.0, 3.0, 7);
  for (double w : q.representatives) CHECK(q.quantize(w) == w);
}

TEST_CASE("cells are right-closed") {
  const QuantizerSpec q = uniform_design(0.0, 4.0, 4);
  CHECK(q.quantize(1.0) == doctest::Approx(0.5));  // boundary goes to the lower cell
  CHECK(q.quantize(1.0 + 1e-12) == doctest::Approx(1.5));
  CHECK(q.quantize(-100.0) == doctest::Approx(0.5));   // saturation below
  CHECK(q.quantize(100.0) == doctest::Approx(3.5));    // saturation above
  const QuantizerSpec one = uniform_design(0.0, 1.0, 1);
  CHECK(one.quantize(-5.0) == one.quantize(7.0));
  CHECK_THROWS_AS((void)q.quantize(std::nan("")), InvalidInputError);
}

TEST_CASE("quantization is idempotent") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(-10.0, 10.0);
  const GridDensity d = GridDensity::from_function(std_normal_pdf, -10.0, 10.0, 4096);
  const QuantizerSpec q = lloyd_design(d, 9).spec;
  for (int k = 0; k < 500; ++k) {
    const double x = unit(rng);
    CHECK(q.quantize(q.quantize(x)) == q.quantize(x));
  }
}

TEST_CASE("table serialization round-trips") {
  const GridDensity d = GridDensity::from_function(std_normal_pdf, -10.0, 10.0, 4096);
  const QuantizerSpec q = lloyd_design(d, 5).spec;
  const QuantizerSpec back = QuantizerSpec::from_table(q.to_table());
  REQUIRE(back.levels() == q.levels());
  for (int l = 0; l < q.levels(); ++l) {
    CHECK(back.representatives[static_cast<size_t>(l)] == q.representatives[static_cast<size_t>(l)]);
    CHECK(back.thresholds[static_cast<size_t>(l)] == q.thresholds[static_cast<size_t>(l)]);
  }
  CHECK_THROWS_AS(QuantizerSpec::from_table("1 bogus"), InvalidConfigError);
  CHECK_THROWS_AS(QuantizerSpec::from_table(""), InvalidConfigError);
}

TEST_SUITE_END();
