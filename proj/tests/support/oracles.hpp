#pragma once

// Reference computations used by the tests. None of these call into the
// library, so a test comparing library output against them is a real check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

namespace oracle {

inline double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double variance(std::span<const double> x) {  // unbiased
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

inline double standard_error(std::span<const double> x) {
  return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

/// Asymptotic two-sample Kolmogorov-Smirnov p-value (Stephens' small-sample
/// correction on the effective size).
inline double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  const double lambda = (ne + 0.12 + 0.11 / ne) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

/// Central-difference gradient of f at x.
inline std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                            std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double x0 = x[k];
    x[k] = x0 + h;
    const double fp = f(x);
    x[k] = x0 - h;
    const double fm = f(x);
    x[k] = x0;
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// max_k |a_k - n_k| / max(|a_k|, |n_k|, floor).
inline double max_relative_error(std::span<const double> a, std::span<const double> n,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double scale = std::max({std::abs(a[k]), std::abs(n[k]), floor});
    worst = std::max(worst, std::abs(a[k] - n[k]) / scale);
  }
  return worst;
}

/// Brute-force midpoint sum of the integral of (1 ^ x^2) C |x|^{-1-a} e^{-l|x|}
/// over the real line. The inner part is mapped by x = t^{1/(2-a)} and the
/// tail by x = 1/s so that both integrands are bounded on (0, 1).
inline double tempered_integrability_riemann(double c, double a, double l, std::size_t n = 2'000'000) {
  const double h = 1.0 / static_cast<double>(n);
  double inner = 0.0, tail = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = (static_cast<double>(k) + 0.5) * h;
    inner += std::exp(-l * std::pow(t, 1.0 / (2.0 - a)));
    tail += std::pow(t, a - 1.0) * std::exp(-l / t);
  }
  inner *= h / (2.0 - a);
  tail *= h;
  return 2.0 * c * (inner + tail);
}

inline std::complex<double> empirical_cf(std::span<const double> x, double u) {
  double re = 0.0, im = 0.0;
  for (double v : x) {
    re += std::cos(u * v);
    im += std::sin(u * v);
  }
  const double n = static_cast<double>(x.size());
  return {re / n, im / n};
}

/// Least-squares slope of y on x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace oracle
