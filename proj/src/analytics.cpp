#include "crowdscore/analytics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace crowdscore::analytics {

namespace {

void check_comparison_inputs(double delta, double sigma) {
  if (delta < 0.0) throw std::invalid_argument("quality gap delta must be >= 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("noise sigma must be > 0");
}

}  // namespace

double p_delta(double delta, double sigma) {
  check_comparison_inputs(delta, sigma);
  return 0.5 * std::erfc(delta / (2.0 * sigma));
}

double p_comp(int w, double delta, double sigma) {
  if (w < 1 || w % 2 == 0) throw std::invalid_argument("p_comp needs an odd worker count");
  const double p = p_delta(delta, sigma);
  if (p <= 0.0) return 0.0;

  // Upper tail of Bin(w, p) beyond w/2. Terms in log space, summed relative
  // to the largest with Kahan compensation.
  const double logp = std::log(p);
  const double logq = std::log1p(-p);
  const double lgw = std::lgamma(w + 1.0);
  std::vector<double> logterms;
  logterms.reserve(static_cast<size_t>(w / 2) + 1);
  for (int k = (w + 1) / 2; k <= w; ++k) {
    const double lt = lgw - std::lgamma(k + 1.0) - std::lgamma(w - k + 1.0) + k * logp +
                      (w - k) * logq;
    logterms.push_back(lt);
  }
  double lmax = logterms.front();
  for (double lt : logterms) lmax = std::max(lmax, lt);
  double sum = 0.0, carry = 0.0;
  for (double lt : logterms) {
    const double term = std::exp(lt - lmax) - carry;
    const double tmp = sum + term;
    carry = (tmp - sum) - term;
    sum = tmp;
  }
  return std::exp(lmax + std::log(sum));
}

double p_est(int w, double delta, double sigma) {
  if (w < 1) throw std::invalid_argument("p_est needs at least one worker");
  check_comparison_inputs(delta, sigma);
  return 0.5 * std::erfc(std::sqrt(static_cast<double>(w)) * delta / (2.0 * sigma));
}

double p_comp_gaussian(int w, double delta, double sigma) {
  if (w < 1) throw std::invalid_argument("p_comp_gaussian needs at least one worker");
  const double p = p_delta(delta, sigma);
  if (p <= 0.0) return 0.0;
  const double arg =
      std::sqrt(static_cast<double>(w)) * (1.0 - 2.0 * p) / (2.0 * std::sqrt(2.0 * p * (1.0 - p)));
  return 0.5 * std::erfc(arg);
}

double p_comp_small_gap(int w, double delta, double sigma) {
  if (w < 1) throw std::invalid_argument("p_comp_small_gap needs at least one worker");
  check_comparison_inputs(delta, sigma);
  const double arg = std::sqrt(2.0 / std::numbers::pi) * std::sqrt(static_cast<double>(w)) * delta /
                     (2.0 * sigma);
  return 0.5 * std::erfc(arg);
}

}  // namespace crowdscore::analytics
