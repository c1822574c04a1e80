#pragma once
// Small numeric helpers: moments, empirical quantiles, log-densities, and an
// autocorrelation-based effective sample size for MCMC output.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace pbchron {

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::domain_error("mean: empty input");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Sample standard deviation (n-1 denominator); 0 for a single value.
inline double sample_sd(const std::vector<double>& v) {
  if (v.empty()) throw std::domain_error("sample_sd: empty input");
  if (v.size() == 1) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double standard_error(const std::vector<double>& v) {
  return sample_sd(v) / std::sqrt(static_cast<double>(v.size()));
}

// Linear-interpolation quantile (R type 7) of an unsorted sample.
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw std::domain_error("quantile: empty input");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("quantile: p outside [0,1]");
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

inline double log_normal_pdf(double x, double mu, double sd) {
  const double z = (x - mu) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

// Gamma parametrized by shape and MEAN (scale = mean/shape).
inline double log_gamma_pdf(double x, double shape, double mean_value) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  const double scale = mean_value / shape;
  return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) - shape * std::log(scale);
}

inline double log_beta_pdf(double x, double a, double b) {
  if (!(x > 0.0 && x < 1.0)) return -std::numeric_limits<double>::infinity();
  const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lbeta;
}

// Effective sample size via Geyer's initial positive sequence on the
// autocovariance of a single scalar chain.
inline double effective_sample_size(const std::vector<double>& chain) {
  const std::size_t n = chain.size();
  if (n < 4) return static_cast<double>(n);
  const double m = mean(chain);
  std::vector<double> c(n, 0.0);
  for (std::size_t lag = 0; lag < n; ++lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (chain[i] - m) * (chain[i + lag] - m);
    c[lag] = s / static_cast<double>(n);
  }
  const double scale = std::abs(m) + 1.0;
  if (c[0] <= scale * scale * 1e-24) return static_cast<double>(n);  // constant chain up to rounding
  double sum_rho = 0.0;
  for (std::size_t k = 1; k + 1 < n; k += 2) {
    const double pair = (c[k] + c[k + 1]) / c[0];
    if (pair <= 0.0) break;
    sum_rho += pair;
  }
  const double ess = static_cast<double>(n) / (1.0 + 2.0 * sum_rho);
  return std::min(ess, static_cast<double>(n));
}

}  // namespace pbchron
