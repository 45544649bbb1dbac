#pragma once

namespace crowdscore::analytics {

/// Probability that one worker prefers the worse of two objects whose
/// qualities differ by `delta`, under evaluation noise of std `sigma`.
double p_delta(double delta, double sigma);

/// Error probability of majority voting over `w` (odd) direct comparisons:
/// the binomial upper tail at p_delta, evaluated in log space so deep tails
/// survive for worker counts up to about 1e4.
double p_comp(int w, double delta, double sigma);

/// Error probability when the same `w` workers return scores instead and the
/// larger estimated quality wins.
double p_est(int w, double delta, double sigma);

/// Gaussian (De Moivre-Laplace) approximation of p_comp.
double p_comp_gaussian(int w, double delta, double sigma);

/// Small-gap limit of the Gaussian approximation, exposing the sqrt(2/pi)
/// penalty of comparisons relative to scores.
double p_comp_small_gap(int w, double delta, double sigma);

}  // namespace crowdscore::analytics
