#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "crowdscore/errors.hpp"

namespace crowdscore {

/// L-level scalar quantizer: thresholds z_1 = -inf < z_2 < ... < z_L <
/// z_{L+1} = +inf and one representative per cell. Cells are right-closed:
/// inputs equal to an interior threshold map to the cell below it.
struct QuantizerSpec {
  std::vector<double> thresholds;       // size L+1
  std::vector<double> representatives;  // size L

  int levels() const { return static_cast<int>(representatives.size()); }
  double quantize(double x) const;
  void validate() const;

  /// Plain-text table with one "level z_l w_l" row per cell.
  std::string to_table() const;
  static QuantizerSpec from_table(const std::string& text);
};

/// Continuous scalar prior used for order-statistic densities.
struct ScalarPrior {
  enum class Kind { kGaussian, kUniform };
  Kind kind = Kind::kGaussian;
  double a = 0.0;  // mean or lo
  double b = 1.0;  // stddev or hi

  static ScalarPrior gaussian(double mean, double stddev);
  static ScalarPrior uniform(double lo, double hi);
  double pdf(double x) const;
  double cdf(double x) const;
  double mean() const;
  /// Grid support bounds (mean +- 8 stddev for the Gaussian case).
  double support_lo() const;
  double support_hi() const;
};

/// Density of the i-th largest of n i.i.d. draws from the prior.
double order_statistic_pdf(const ScalarPrior& prior, int i, int n, double x);

/// Density tabulated on a uniform grid, with trapezoid prefix integrals for
/// cell masses, cell moments and quantiles.
class GridDensity {
 public:
  GridDensity(std::vector<double> values, double x0, double dx);
  static GridDensity from_function(const std::function<double(double)>& f, double lo, double hi,
                                   int points);

  int size() const { return static_cast<int>(f_.size()); }
  double grid_lo() const { return x0_; }
  double grid_hi() const { return x0_ + dx_ * (size() - 1); }
  double step() const { return dx_; }
  double value_at(int k) const { return f_[static_cast<size_t>(k)]; }

  double total_mass() const { return cum0_.back(); }
  double mean() const { return cum1_.back() / cum0_.back(); }

  double mass_below(double x) const;
  double moment1_below(double x) const;
  double moment2_below(double x) const;
  double mass_between(double a, double b) const;
  /// Smallest x with mass_below(x) >= target (absolute mass, not normalized).
  double x_at_mass(double target) const;
  /// p-quantile of the normalized density.
  double quantile(double p) const;

  /// Mean square quantization error E[(x - Q(x))^2] under this density.
  double mse(const QuantizerSpec& spec) const;

  /// Scales values so the density integrates to one.
  void normalize();

 private:
  double prefix(const std::vector<double>& cum, const std::vector<double>& g, double x) const;

  double x0_ = 0.0;
  double dx_ = 1.0;
  std::vector<double> f_;
  std::vector<double> g1_, g2_;          // x f(x), x^2 f(x) samples
  std::vector<double> cum0_, cum1_, cum2_;
};

/// Which answers the quantizer should represent well.
enum class AnswerDist {
  kGeneric,   // any object's answer
  kTopOnly,   // answers about the best object only
  kWeighted,  // geometric blend over the ranked objects
};

/// Recipe for the answer density the quantizer is designed against:
/// a (possibly weighted) mixture of quality order statistics, blurred by the
/// evaluation-error density.
struct AnswerDensityConfig {
  AnswerDist dist = AnswerDist::kWeighted;
  /// Geometric weight base for kWeighted: rank i gets weight gamma^(i-1),
  /// normalized over all ranks. Must lie in (0, 1].
  double gamma = 0.5;
  int n_objects = 2;
  /// Continuous prior, or the fixed lattice of quality values.
  std::variant<ScalarPrior, std::vector<double>> quality;
  /// Standard deviation of the total evaluation error (bias plus noise).
  double noise_std = 1.0;
  int grid_points = 8192;
};

GridDensity answer_density(const AnswerDensityConfig& cfg);

struct LloydResult {
  QuantizerSpec spec;
  std::vector<double> mse_history;  // one entry per iteration
  int iterations = 0;
  bool converged = false;
};

/// Alternates centroid and midpoint-boundary steps from quantile seeding
/// until the representatives stop moving. Empty cells are repaired by
/// splitting the heaviest cell at its conditional median.
LloydResult lloyd_design(const GridDensity& density, int levels, double tol = 1e-10,
                         int max_iter = 1000);

/// Equal-width cells on [lo, hi] with midpoint representatives; the outer
/// cells extend to +-inf.
QuantizerSpec uniform_design(double lo, double hi, int levels);

}  // namespace crowdscore
