#pragma once

// Small statistics toolbox: normal-approximation confidence intervals,
// Wilson bounds for frequencies, log-log regression, and the closed-form
// bounds the measurements are compared against.

#include <cmath>
#include <vector>

#include "lmx/core.hpp"

namespace lmx {

struct MeanCI {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;
};

inline MeanCI mean_ci(const std::vector<double>& xs) {
  MeanCI r;
  r.n = xs.size();
  if (xs.empty()) return r;
  double sum = 0;
  for (double x : xs) sum += x;
  r.mean = sum / static_cast<double>(xs.size());
  if (xs.size() == 1) {
    r.lo = r.hi = r.mean;
    return r;
  }
  double ss = 0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  double half = 1.96 * sd / std::sqrt(static_cast<double>(xs.size()));
  r.lo = r.mean - half;
  r.hi = r.mean + half;
  return r;
}

// Wilson score interval for a binomial frequency.
inline MeanCI frequency_ci(std::int64_t successes, std::int64_t trials) {
  MeanCI r;
  r.n = static_cast<std::size_t>(trials);
  if (trials <= 0) return r;
  const double z = 1.96, z2 = z * z;
  const double nt = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / nt;
  r.mean = p;
  const double denom = 1.0 + z2 / nt;
  const double center = p + z2 / (2.0 * nt);
  const double spread = z * std::sqrt(p * (1.0 - p) / nt + z2 / (4.0 * nt * nt));
  r.lo = (center - spread) / denom;
  r.hi = (center + spread) / denom;
  return r;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t n = 0;
};

inline LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  LinearFit f;
  f.n = xs.size();
  require(xs.size() == ys.size(), "fit: size mismatch");
  if (xs.size() < 2) return f;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

// Fitted exponent of y ~ x^a via regression in log-log space.
inline LinearFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    require(xs[i] > 0 && ys[i] > 0, "loglog fit needs positive data");
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  return fit_line(lx, ly);
}

// ---- closed-form bounds from the locking-time analysis --------------------

// Lower bound on the probability of winning one open competition trial.
inline double win_probability_bound(int delta, int k_range) {
  const double d2 = 2.0 * delta * delta;
  return std::pow(1.0 - 1.0 / k_range, d2) / d2;
}

// Upper bound on the expected number of trials to a win.
inline double expected_trials_bound(int delta, int k_range) {
  return 1.0 / win_probability_bound(delta, k_range);
}

// Open-round bound for resolving one competition trial, at dependency
// depth k (initiators along the longest path).
inline double trial_rounds_bound(int delta, int k) {
  return 2.0 * k * (10.0 * delta + 20.0);
}

// Open-round bound for a whole lock request: (2*delta+4)(7 + 20 e^{4/c} n delta^2).
inline double request_rounds_bound(int n, int delta, double c) {
  return (2.0 * delta + 4.0) * (7.0 + 20.0 * std::exp(4.0 / c) * n * delta * delta);
}

}  // namespace lmx
