#include "crowdscore/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace crowdscore {

namespace {

constexpr double kTinyCellMass = 1e-12;

double normal_pdf(double x, double stddev) {
  const double z = x / stddev;
  return std::exp(-0.5 * z * z) / (stddev * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

double QuantizerSpec::quantize(double x) const {
  if (std::isnan(x)) throw InvalidInputError("quantize: NaN input");
  // Interior thresholds are thresholds[1..L-1]; cells are right-closed, so
  // the cell index is the number of interior thresholds strictly below x.
  auto begin = thresholds.begin() + 1;
  auto end = thresholds.end() - 1;
  const auto idx = std::lower_bound(begin, end, x) - begin;
  return representatives[static_cast<size_t>(idx)];
}

void QuantizerSpec::validate() const {
  const int levels_n = levels();
  if (levels_n < 1) throw InvalidInstanceError("quantizer needs at least one level");
  if (static_cast<int>(thresholds.size()) != levels_n + 1)
    throw InvalidInstanceError("quantizer needs levels+1 thresholds");
  if (!std::isinf(thresholds.front()) || thresholds.front() > 0)
    throw InvalidInstanceError("first threshold must be -inf");
  if (!std::isinf(thresholds.back()) || thresholds.back() < 0)
    throw InvalidInstanceError("last threshold must be +inf");
  for (int l = 1; l + 1 < static_cast<int>(thresholds.size()); ++l)
    if (!(thresholds[static_cast<size_t>(l)] < thresholds[static_cast<size_t>(l) + 1]))
      throw InvalidInstanceError("interior thresholds must be strictly increasing");
  for (int l = 0; l < levels_n; ++l) {
    const double w = representatives[static_cast<size_t>(l)];
    if (!(w > thresholds[static_cast<size_t>(l)] && w <= thresholds[static_cast<size_t>(l) + 1]))
      throw InvalidInstanceError("representative outside its cell");
  }
}

std::string QuantizerSpec::to_table() const {
  std::ostringstream out;
  out.precision(17);
  for (int l = 0; l < levels(); ++l)
    out << (l + 1) << ' ' << thresholds[static_cast<size_t>(l)] << ' '
        << representatives[static_cast<size_t>(l)] << '\n';
  return out.str();
}

QuantizerSpec QuantizerSpec::from_table(const std::string& text) {
  QuantizerSpec spec;
  std::istringstream in(text);
  std::string line;
  int expected = 1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    int level = 0;
    std::string ztok, wtok;
    if (!(row >> level >> ztok >> wtok))
      throw InvalidConfigError("quantizer table: malformed row '" + line + "'");
    double z = 0.0, w = 0.0;
    try {
      // stod handles "inf"/"-inf", which stream extraction does not.
      size_t zpos = 0, wpos = 0;
      z = std::stod(ztok, &zpos);
      w = std::stod(wtok, &wpos);
      if (zpos != ztok.size() || wpos != wtok.size()) throw std::invalid_argument(line);
    } catch (const std::exception&) {
      throw InvalidConfigError("quantizer table: malformed row '" + line + "'");
    }
    if (level != expected)
      throw InvalidConfigError("quantizer table: expected level " + std::to_string(expected));
    spec.thresholds.push_back(z);
    spec.representatives.push_back(w);
    ++expected;
  }
  if (spec.representatives.empty()) throw InvalidConfigError("quantizer table: no rows");
  spec.thresholds.push_back(std::numeric_limits<double>::infinity());
  spec.validate();
  return spec;
}

ScalarPrior ScalarPrior::gaussian(double mean, double stddev) {
  if (!(stddev > 0.0)) throw InvalidInstanceError("Gaussian prior needs stddev > 0");
  return ScalarPrior{Kind::kGaussian, mean, stddev};
}

ScalarPrior ScalarPrior::uniform(double lo, double hi) {
  if (!(lo < hi)) throw InvalidInstanceError("uniform prior needs lo < hi");
  return ScalarPrior{Kind::kUniform, lo, hi};
}

double ScalarPrior::pdf(double x) const {
  if (kind == Kind::kGaussian) return normal_pdf(x - a, b);
  return (x >= a && x <= b) ? 1.0 / (b - a) : 0.0;
}

double ScalarPrior::cdf(double x) const {
  if (kind == Kind::kGaussian) return 0.5 * std::erfc(-(x - a) / (b * std::numbers::sqrt2));
  if (x <= a) return 0.0;
  if (x >= b) return 1.0;
  return (x - a) / (b - a);
}

double ScalarPrior::mean() const { return kind == Kind::kGaussian ? a : 0.5 * (a + b); }
double ScalarPrior::support_lo() const { return kind == Kind::kGaussian ? a - 8.0 * b : a; }
double ScalarPrior::support_hi() const { return kind == Kind::kGaussian ? a + 8.0 * b : b; }

double order_statistic_pdf(const ScalarPrior& prior, int i, int n, double x) {
  if (i < 1 || i > n) throw InvalidInstanceError("order statistic rank out of range");
  const double f = prior.pdf(x);
  if (!(f > 0.0)) return 0.0;
  const double cdf = prior.cdf(x);
  // n! / ((n-i)! (i-1)!) f(x) F(x)^(n-i) (1-F(x))^(i-1), in log space.
  double t = std::lgamma(n + 1.0) - std::lgamma(n - i + 1.0) - std::lgamma(static_cast<double>(i)) +
             std::log(f);
  if (n - i > 0) {
    if (cdf <= 0.0) return 0.0;
    t += (n - i) * std::log(cdf);
  }
  if (i - 1 > 0) {
    if (cdf >= 1.0) return 0.0;
    t += (i - 1) * std::log1p(-cdf);
  }
  return std::exp(t);
}

GridDensity::GridDensity(std::vector<double> values, double x0, double dx)
    : x0_(x0), dx_(dx), f_(std::move(values)) {
  if (f_.size() < 2) throw InvalidInstanceError("grid density needs at least two points");
  if (!(dx > 0.0)) throw InvalidInstanceError("grid density needs dx > 0");
  const size_t n = f_.size();
  g1_.resize(n);
  g2_.resize(n);
  for (size_t k = 0; k < n; ++k) {
    const double x = x0_ + dx_ * static_cast<double>(k);
    g1_[k] = x * f_[k];
    g2_[k] = x * x * f_[k];
  }
  cum0_.resize(n);
  cum1_.resize(n);
  cum2_.resize(n);
  cum0_[0] = cum1_[0] = cum2_[0] = 0.0;
  for (size_t k = 1; k < n; ++k) {
    cum0_[k] = cum0_[k - 1] + 0.5 * dx_ * (f_[k - 1] + f_[k]);
    cum1_[k] = cum1_[k - 1] + 0.5 * dx_ * (g1_[k - 1] + g1_[k]);
    cum2_[k] = cum2_[k - 1] + 0.5 * dx_ * (g2_[k - 1] + g2_[k]);
  }
}

GridDensity GridDensity::from_function(const std::function<double(double)>& f, double lo, double hi,
                                       int points) {
  if (!(hi > lo)) throw InvalidInstanceError("grid density needs hi > lo");
  if (points < 2) throw InvalidInstanceError("grid density needs at least two points");
  const double dx = (hi - lo) / (points - 1);
  std::vector<double> values(static_cast<size_t>(points));
  for (int k = 0; k < points; ++k) values[static_cast<size_t>(k)] = f(lo + dx * k);
  return GridDensity(std::move(values), lo, dx);
}

double GridDensity::prefix(const std::vector<double>& cum, const std::vector<double>& g,
                           double x) const {
  if (x <= x0_) return 0.0;
  const double pos = (x - x0_) / dx_;
  const auto n = static_cast<int>(f_.size());
  if (pos >= n - 1) return cum.back();
  const int k = static_cast<int>(pos);
  const double t = pos - k;
  // Linear interpolation of the integrand inside the cell keeps the partial
  // integral consistent with the trapezoid prefix.
  const double gk = g[static_cast<size_t>(k)];
  const double gk1 = g[static_cast<size_t>(k) + 1];
  const double gx = gk + t * (gk1 - gk);
  return cum[static_cast<size_t>(k)] + 0.5 * (gk + gx) * t * dx_;
}

double GridDensity::mass_below(double x) const { return prefix(cum0_, f_, x); }
double GridDensity::moment1_below(double x) const { return prefix(cum1_, g1_, x); }
double GridDensity::moment2_below(double x) const { return prefix(cum2_, g2_, x); }

double GridDensity::mass_between(double a, double b) const {
  return mass_below(b) - mass_below(a);
}

double GridDensity::x_at_mass(double target) const {
  if (target <= 0.0) return grid_lo();
  if (target >= total_mass()) return grid_hi();
  const auto it = std::lower_bound(cum0_.begin(), cum0_.end(), target);
  const auto k = static_cast<size_t>(it - cum0_.begin());
  const double below = cum0_[k - 1];
  const double span = cum0_[k] - below;
  const double t = span > 0.0 ? (target - below) / span : 0.5;
  return x0_ + dx_ * (static_cast<double>(k - 1) + t);
}

double GridDensity::quantile(double p) const { return x_at_mass(p * total_mass()); }

double GridDensity::mse(const QuantizerSpec& spec) const {
  double total = 0.0;
  for (int l = 0; l < spec.levels(); ++l) {
    const double zl = std::max(spec.thresholds[static_cast<size_t>(l)], grid_lo());
    const double zr = std::min(spec.thresholds[static_cast<size_t>(l) + 1], grid_hi());
    if (!(zr > zl)) continue;
    const double m0 = mass_below(zr) - mass_below(zl);
    const double m1 = moment1_below(zr) - moment1_below(zl);
    const double m2 = moment2_below(zr) - moment2_below(zl);
    const double w = spec.representatives[static_cast<size_t>(l)];
    total += m2 - 2.0 * w * m1 + w * w * m0;
  }
  return total / total_mass();
}

void GridDensity::normalize() {
  const double mass = total_mass();
  if (!(mass > 0.0)) throw InvalidInstanceError("cannot normalize a zero-mass density");
  *this = GridDensity(
      [&] {
        std::vector<double> scaled = f_;
        for (double& v : scaled) v /= mass;
        return scaled;
      }(),
      x0_, dx_);
}

namespace {

std::vector<double> rank_weights(const AnswerDensityConfig& cfg) {
  const int n = cfg.n_objects;
  if (n < 1) throw InvalidInstanceError("answer density needs at least one object");
  std::vector<double> alpha(static_cast<size_t>(n), 0.0);
  switch (cfg.dist) {
    case AnswerDist::kGeneric:
      std::fill(alpha.begin(), alpha.end(), 1.0 / n);
      break;
    case AnswerDist::kTopOnly:
      alpha[0] = 1.0;
      break;
    case AnswerDist::kWeighted: {
      if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0))
        throw InvalidInstanceError("weighted answer density needs gamma in (0, 1]");
      double sum = 0.0;
      double w = 1.0;
      for (int i = 0; i < n; ++i) {
        alpha[static_cast<size_t>(i)] = w;
        sum += w;
        w *= cfg.gamma;
      }
      for (double& a : alpha) a /= sum;
      break;
    }
  }
  return alpha;
}

}  // namespace

GridDensity answer_density(const AnswerDensityConfig& cfg) {
  if (!(cfg.noise_std > 0.0)) throw InvalidInstanceError("answer density needs noise_std > 0");
  const std::vector<double> alpha = rank_weights(cfg);
  const int points = cfg.grid_points;

  if (std::holds_alternative<std::vector<double>>(cfg.quality)) {
    // Fixed lattice of qualities: ranks are point masses, so the blurred
    // mixture is a plain Gaussian mixture over the sorted values.
    std::vector<double> values = std::get<std::vector<double>>(cfg.quality);
    if (static_cast<int>(values.size()) != cfg.n_objects)
      throw InvalidInstanceError("answer density: lattice size must equal n_objects");
    std::sort(values.begin(), values.end(), std::greater<>());
    const double lo = values.back() - 8.0 * cfg.noise_std;
    const double hi = values.front() + 8.0 * cfg.noise_std;
    GridDensity d = GridDensity::from_function(
        [&](double x) {
          double v = 0.0;
          for (size_t i = 0; i < values.size(); ++i) {
            if (alpha[i] < 1e-16) continue;
            v += alpha[i] * normal_pdf(x - values[i], cfg.noise_std);
          }
          return v;
        },
        lo, hi, points);
    d.normalize();
    return d;
  }

  const ScalarPrior prior = std::get<ScalarPrior>(cfg.quality);
  const double lo = prior.support_lo() - 8.0 * cfg.noise_std;
  const double hi = prior.support_hi() + 8.0 * cfg.noise_std;
  const double dx = (hi - lo) / (points - 1);

  // Rank mixture before blurring. Equal weights collapse to the plain prior,
  // since the rank densities sum to n times the prior density.
  const bool uniform_weights =
      std::all_of(alpha.begin(), alpha.end(), [&](double a) { return a == alpha[0]; });
  std::vector<double> mixture(static_cast<size_t>(points), 0.0);
  for (int k = 0; k < points; ++k) {
    const double x = lo + dx * k;
    if (uniform_weights) {
      mixture[static_cast<size_t>(k)] = prior.pdf(x);
    } else {
      double v = 0.0;
      for (int i = 1; i <= cfg.n_objects; ++i) {
        const double a = alpha[static_cast<size_t>(i - 1)];
        if (a < 1e-16) break;  // weights are non-increasing
        v += a * order_statistic_pdf(prior, i, cfg.n_objects, x);
      }
      mixture[static_cast<size_t>(k)] = v;
    }
  }

  // Blur with the evaluation-error kernel; the kernel values depend only on
  // the offset, so the convolution is a windowed dot product.
  const int window = static_cast<int>(std::ceil(8.0 * cfg.noise_std / dx));
  std::vector<double> kernel(static_cast<size_t>(window) + 1);
  for (int m = 0; m <= window; ++m)
    kernel[static_cast<size_t>(m)] = normal_pdf(m * dx, cfg.noise_std) * dx;
  std::vector<double> blurred(static_cast<size_t>(points), 0.0);
  for (int k = 0; k < points; ++k) {
    double v = mixture[static_cast<size_t>(k)] * kernel[0];
    for (int m = 1; m <= window; ++m) {
      double acc = 0.0;
      if (k - m >= 0) acc += mixture[static_cast<size_t>(k - m)];
      if (k + m < points) acc += mixture[static_cast<size_t>(k + m)];
      v += acc * kernel[static_cast<size_t>(m)];
    }
    blurred[static_cast<size_t>(k)] = v;
  }

  GridDensity d(std::move(blurred), lo, dx);
  d.normalize();
  return d;
}

namespace {

std::vector<double> midpoint_thresholds(const std::vector<double>& reps) {
  std::vector<double> z(reps.size() + 1);
  z.front() = -std::numeric_limits<double>::infinity();
  z.back() = std::numeric_limits<double>::infinity();
  for (size_t l = 1; l < reps.size(); ++l) z[l] = 0.5 * (reps[l - 1] + reps[l]);
  return z;
}

// Splits the heaviest cell at its conditional median when some cell has lost
// its probability mass. Returns true if a repair happened.
bool repair_empty_cells(std::vector<double>& reps, const GridDensity& density) {
  const std::vector<double> z = midpoint_thresholds(reps);
  const size_t levels = reps.size();
  int empty = -1;
  int heaviest = 0;
  double heaviest_mass = -1.0;
  std::vector<double> masses(levels);
  for (size_t l = 0; l < levels; ++l) {
    masses[l] = density.mass_between(std::max(z[l], density.grid_lo()),
                                     std::min(z[l + 1], density.grid_hi()));
    if (masses[l] < kTinyCellMass && empty < 0) empty = static_cast<int>(l);
    if (masses[l] > heaviest_mass) {
      heaviest_mass = masses[l];
      heaviest = static_cast<int>(l);
    }
  }
  if (empty < 0 || empty == heaviest) return false;

  const double lo = std::max(z[static_cast<size_t>(heaviest)], density.grid_lo());
  const double hi = std::min(z[static_cast<size_t>(heaviest) + 1], density.grid_hi());
  const double below = density.mass_below(lo);
  const double median = density.x_at_mass(below + 0.5 * heaviest_mass);
  auto cell_mean = [&](double a, double b) {
    const double m0 = density.mass_below(b) - density.mass_below(a);
    const double m1 = density.moment1_below(b) - density.moment1_below(a);
    return m0 > 0.0 ? m1 / m0 : 0.5 * (a + b);
  };
  // Drop the starved representative and the heaviest one; replace them with
  // the conditional means of the heaviest cell's two halves.
  std::vector<double> next;
  next.reserve(reps.size());
  for (size_t l = 0; l < reps.size(); ++l)
    if (static_cast<int>(l) != empty && static_cast<int>(l) != heaviest) next.push_back(reps[l]);
  next.push_back(cell_mean(lo, median));
  next.push_back(cell_mean(median, hi));
  std::sort(next.begin(), next.end());
  reps = next;
  return true;
}

}  // namespace

LloydResult lloyd_design(const GridDensity& density, int levels, double tol, int max_iter) {
  if (levels < 1) throw InvalidInstanceError("lloyd_design needs at least one level");
  LloydResult result;

  // Quantile seeding avoids empty cells even for strongly skewed mixtures.
  std::vector<double> reps(static_cast<size_t>(levels));
  for (int l = 0; l < levels; ++l)
    reps[static_cast<size_t>(l)] = density.quantile((2.0 * l + 1.0) / (2.0 * levels));
  for (size_t l = 1; l < reps.size(); ++l)
    if (reps[l] <= reps[l - 1]) reps[l] = reps[l - 1] + density.step();

  for (int it = 0; it < max_iter; ++it) {
    int repairs = 0;
    while (repair_empty_cells(reps, density) && repairs++ < levels) {}

    const std::vector<double> z = midpoint_thresholds(reps);
    double movement = 0.0;
    std::vector<double> next(reps.size());
    for (size_t l = 0; l < reps.size(); ++l) {
      const double a = std::max(z[l], density.grid_lo());
      const double b = std::min(z[l + 1], density.grid_hi());
      const double m0 = density.mass_below(b) - density.mass_below(a);
      const double m1 = density.moment1_below(b) - density.moment1_below(a);
      next[l] = m0 > 0.0 ? m1 / m0 : reps[l];
      // Centroids can only live inside their cell; clamp against roundoff.
      next[l] = std::min(
          std::max(next[l], std::nextafter(z[l], std::numeric_limits<double>::infinity())),
          z[l + 1]);
      movement = std::max(movement, std::abs(next[l] - reps[l]));
    }
    reps = next;
    ++result.iterations;

    QuantizerSpec spec;
    spec.thresholds = midpoint_thresholds(reps);
    spec.representatives = reps;
    result.mse_history.push_back(density.mse(spec));

    if (movement < tol) {
      result.converged = true;
      break;
    }
  }

  result.spec.thresholds = midpoint_thresholds(reps);
  result.spec.representatives = reps;
  result.spec.validate();
  return result;
}

QuantizerSpec uniform_design(double lo, double hi, int levels) {
  if (!(lo < hi)) throw InvalidInstanceError("uniform_design needs lo < hi");
  if (levels < 1) throw InvalidInstanceError("uniform_design needs at least one level");
  QuantizerSpec spec;
  const double width = (hi - lo) / levels;
  spec.thresholds.resize(static_cast<size_t>(levels) + 1);
  spec.representatives.resize(static_cast<size_t>(levels));
  spec.thresholds.front() = -std::numeric_limits<double>::infinity();
  spec.thresholds.back() = std::numeric_limits<double>::infinity();
  for (int l = 1; l < levels; ++l) spec.thresholds[static_cast<size_t>(l)] = lo + width * l;
  for (int l = 0; l < levels; ++l)
    spec.representatives[static_cast<size_t>(l)] = lo + width * (l + 0.5);
  spec.validate();
  return spec;
}

}  // namespace crowdscore
