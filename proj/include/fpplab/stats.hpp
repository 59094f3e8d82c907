#pragma once

// Small statistics toolkit: means, confidence intervals, least squares.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace fpplab {

/// Pairwise summation.
inline double stable_sum(const double* x, std::size_t n) {
  if (n <= 32) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return stable_sum(x, h) + stable_sum(x + h, n - h);
}
inline double stable_sum(const std::vector<double>& x) { return stable_sum(x.data(), x.size()); }

struct SampleSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error() const { return n > 0 ? std::sqrt(variance / double(n)) : 0.0; }
};

inline SampleSummary summarize(const std::vector<double>& x) {
  SampleSummary s;
  s.n = x.size();
  if (s.n == 0) return s;
  s.mean = stable_sum(x) / double(s.n);
  if (s.n > 1) {
    std::vector<double> sq(s.n);
    for (std::size_t i = 0; i < s.n; ++i) sq[i] = (x[i] - s.mean) * (x[i] - s.mean);
    s.variance = stable_sum(sq) / double(s.n - 1);
  }
  return s;
}

inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

/// Two-sided critical value for a confidence level in (0,1).
inline double z_value(double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must lie in (0,1)");
  return normal_quantile(0.5 + level / 2.0);
}

struct Interval {
  double center = 0.0, half_width = 0.0;
  double low() const { return center - half_width; }
  double high() const { return center + half_width; }
};

/// Normal-approximation interval for the mean.
inline Interval confidence_interval(const std::vector<double>& x, double level = 0.95) {
  const double z = z_value(level);
  if (x.size() < 2) throw std::invalid_argument("confidence_interval: need at least 2 samples");
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("confidence_interval: non-finite sample");
  const auto s = summarize(x);
  return {s.mean, z * s.std_error()};
}

struct ProportionInterval {
  double estimate = 0.0, low = 0.0, high = 0.0;
};

inline ProportionInterval wilson_interval(std::size_t successes, std::size_t n, double level = 0.95) {
  const double z = z_value(level);
  if (n == 0) throw std::invalid_argument("wilson_interval: no trials");
  if (successes > n) throw std::invalid_argument("wilson_interval: successes exceed trials");
  const double p = double(successes) / double(n);
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {p, std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct LinearFit {
  double intercept = 0.0, slope = 0.0;
  double slope_se = 0.0, intercept_se = 0.0;
  std::size_t n = 0;
};

/// Weighted least squares y ≈ a + b x; unit weights when `w` is empty. The
/// standard errors use the residual variance.
inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y,
                               const std::vector<double>& w = {}) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n || (!w.empty() && w.size() != n))
    throw std::invalid_argument("least_squares: need >= 2 matched points");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sw += wi;
    sx += wi * x[i];
    sy += wi * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sxx += wi * (x[i] - mx) * (x[i] - mx);
    sxy += wi * (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("least_squares: abscissae are all equal");
  LinearFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += (w.empty() ? 1.0 : w[i]) * r * r;
    }
    const double s2 = rss / double(n - 2);
    f.slope_se = std::sqrt(s2 / sxx);
    f.intercept_se = std::sqrt(s2 * (1.0 / sw + mx * mx / sxx));
  }
  return f;
}

}  // namespace fpplab
