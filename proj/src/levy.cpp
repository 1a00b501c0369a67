#include "levyforge/levy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "levyforge/error.hpp"

namespace levyforge::processes {

namespace {

constexpr double kPi = std::numbers::pi;

double checked(double value, double error_estimate, const char* what) {
  if (!std::isfinite(value) || !std::isfinite(error_estimate) ||
      error_estimate > 1e-8 * std::max(1.0, std::abs(value)))
    throw Error(ErrorKind::numerical, std::string("quadrature did not converge: ") + what);
  return value;
}

// One-sided integral of x^power e^{-lambda x} over [a, b] in log coordinates,
// where the integrand is smooth: int e^{(power+1)s} e^{-lambda e^s} ds.
double log_space_integral(double power, double lambda, double a, double b) {
  auto f = [=](double s) { return std::exp((power + 1.0) * s - lambda * std::exp(s)); };
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, std::log(a), std::log(b), 15, 1e-12, &err);
  return checked(v, err, "log-space segment");
}

// int_a^inf x^power e^{-lambda x} dx.
double tail_integral(double power, double lambda, double a) {
  auto f = [=](double y) { return std::pow(a + y, power) * std::exp(-lambda * (a + y)); };
  boost::math::quadrature::exp_sinh<double> integrator;
  double err = 0.0;
  const double v = integrator.integrate(f, 1e-12, &err);
  return checked(v, err, "tail");
}

}  // namespace

void validate(const StableParams& p) {
  require(std::isfinite(p.alpha) && p.alpha > 0.0 && p.alpha <= 2.0, ErrorKind::domain,
          "stable alpha must lie in (0, 2]");
  require(std::isfinite(p.beta_skew) && p.beta_skew >= -1.0 && p.beta_skew <= 1.0,
          ErrorKind::domain, "stable beta must lie in [-1, 1]");
  require(std::isfinite(p.gamma_loc), ErrorKind::domain, "stable location must be finite");
  require(std::isfinite(p.scale) && p.scale > 0.0, ErrorKind::domain, "stable scale must be > 0");
  require(p.alpha != 1.0, ErrorKind::unsupported,
          "alpha = 1 needs the logarithmic characteristic-function branch, which is not provided");
}

void validate(const TemperedParams& p) {
  require(std::isfinite(p.c_level) && p.c_level > 0.0, ErrorKind::domain, "C must be > 0");
  require(std::isfinite(p.alpha) && p.alpha > 0.0 && p.alpha < 2.0, ErrorKind::domain,
          "tempered alpha must lie in (0, 2)");
  require(std::isfinite(p.lambda_temper) && p.lambda_temper > 0.0, ErrorKind::domain,
          "tempering rate must be > 0");
}

double sample_alpha_stable(const StableParams& p, Rng& rng) {
  const double a = p.alpha;
  const double v = kPi * (rng.uniform_open() - 0.5);
  const double w = -std::log(rng.uniform_open());
  const double tan_term = p.beta_skew * std::tan(0.5 * kPi * a);
  const double shift = std::atan(tan_term) / a;
  const double stretch = std::pow(1.0 + tan_term * tan_term, 0.5 / a);
  const double x = stretch * std::sin(a * (v + shift)) / std::pow(std::cos(v), 1.0 / a) *
                   std::pow(std::cos(v - a * (v + shift)) / w, (1.0 - a) / a);
  return p.scale * x + p.gamma_loc;
}

std::vector<double> sample_alpha_stable(const StableParams& p, std::size_t n, std::uint64_t seed) {
  validate(p);
  Rng rng = make_stream(seed, 0);
  std::vector<double> out(n);
  for (double& x : out) x = sample_alpha_stable(p, rng);
  return out;
}

std::complex<double> stable_cf(double u, double t, const StableParams& p) {
  validate(p);
  require(t >= 0.0, ErrorKind::domain, "time must be >= 0");
  if (u == 0.0) return {1.0, 0.0};
  const double sgn = u > 0.0 ? 1.0 : -1.0;
  const double mag = t * std::pow(p.scale * std::abs(u), p.alpha);
  const std::complex<double> exponent{-mag, mag * p.beta_skew * sgn * std::tan(0.5 * kPi * p.alpha) +
                                                p.gamma_loc * u};
  return std::exp(exponent);
}

double tempered_levy_density(double x, const TemperedParams& p) {
  // lambda = 0 is allowed here: it is the untempered stable density.
  validate(TemperedParams{p.c_level, p.alpha, p.lambda_temper == 0.0 ? 1.0 : p.lambda_temper});
  require(x != 0.0, ErrorKind::domain, "the Levy density is singular at x = 0");
  const double ax = std::abs(x);
  return p.c_level * std::pow(ax, -1.0 - p.alpha) * std::exp(-p.lambda_temper * ax);
}

double levy_integrability_check(const TemperedParams& p, double cutoff) {
  validate(p);
  require(std::isfinite(cutoff) && cutoff > 0.0, ErrorKind::domain, "cutoff must be > 0");
  const double a = p.alpha, lam = p.lambda_temper;
  const double inner = std::min(cutoff, 1.0);

  // int_0^inner x^{1-a} e^{-lam x} dx = lam^{a-2} gamma_lower(2-a, lam inner)
  const double small = std::pow(lam, a - 2.0) * boost::math::tgamma_lower(2.0 - a, lam * inner);
  const double middle = inner < 1.0 ? log_space_integral(1.0 - a, lam, inner, 1.0) : 0.0;
  const double tail = tail_integral(-1.0 - a, lam, 1.0);

  const double value = 2.0 * p.c_level * (small + middle + tail);
  require(std::isfinite(value), ErrorKind::numerical, "Levy integrability integral diverged");
  return value;
}

TemperedJumpSampler::TemperedJumpSampler(const TemperedParams& p, double cutoff,
                                         std::size_t table_size)
    : cutoff_(cutoff) {
  validate(p);
  require(std::isfinite(cutoff) && cutoff > 0.0, ErrorKind::domain, "cutoff must be > 0");
  require(table_size >= 16, ErrorKind::size, "inverse-CDF table needs at least 16 nodes");
  const double a = p.alpha, lam = p.lambda_temper;

  // Past cutoff + 40/lambda the remaining mass is below e^{-40} of the total.
  const double upper = std::max(cutoff * 10.0, cutoff + 40.0 / lam);
  const double s0 = std::log(cutoff), s1 = std::log(upper);
  log_nodes_.resize(table_size + 1);
  cdf_.assign(table_size + 1, 0.0);
  for (std::size_t j = 0; j <= table_size; ++j)
    log_nodes_[j] = s0 + (s1 - s0) * static_cast<double>(j) / static_cast<double>(table_size);

  auto density = [=](double s) { return std::exp(-a * s - lam * std::exp(s)); };
  auto second = [=](double s) { return std::exp((2.0 - a) * s - lam * std::exp(s)); };
  double mass = 0.0, m2 = 0.0;
  for (std::size_t j = 0; j < table_size; ++j) {
    mass += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(density, log_nodes_[j],
                                                                          log_nodes_[j + 1], 0);
    m2 += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(second, log_nodes_[j],
                                                                        log_nodes_[j + 1], 0);
    cdf_[j + 1] = mass;
  }
  require(mass > 0.0 && std::isfinite(mass), ErrorKind::numerical, "tempered jump mass is not finite");
  for (double& c : cdf_) c /= mass;
  cdf_.back() = 1.0;
  intensity_ = 2.0 * p.c_level * mass;
  second_moment_ = 2.0 * p.c_level * m2;
}

double TemperedJumpSampler::magnitude_from_uniform(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const std::size_t j = std::clamp<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), 1,
                                                cdf_.size() - 1);
  const double lo = cdf_[j - 1], hi = cdf_[j];
  const double frac = hi > lo ? (u - lo) / (hi - lo) : 0.0;
  return std::exp(log_nodes_[j - 1] + frac * (log_nodes_[j] - log_nodes_[j - 1]));
}

double TemperedJumpSampler::sample(Rng& rng) const {
  const double sign = (rng() >> 63) != 0 ? 1.0 : -1.0;
  return sign * magnitude_from_uniform(rng.uniform_open());
}

PathSet simulate_tempered_jumps(const TemperedParams& p, const SimGrid& grid, std::size_t n_paths,
                                std::uint64_t seed, double small_jump_cutoff) {
  validate(grid);
  const TemperedJumpSampler sampler(p, small_jump_cutoff);
  const double dt = grid.dt();
  const double rate = sampler.intensity() * dt;
  if (rate > 1e3)
    throw Error(ErrorKind::numerical, "cutoff " + std::to_string(small_jump_cutoff) +
                                          " leaves " + std::to_string(rate) +
                                          " expected jumps per step; raise the cutoff");
  PathSet out(grid, n_paths);
  out.jump_counts.resize(n_paths);
  const double drift = sampler.compensator_drift() * dt;
  for (std::size_t i = 0; i < n_paths; ++i) {
    Rng rng = make_stream(seed, i);
    std::poisson_distribution<std::uint32_t> arrivals(rate > 0.0 ? rate : 1.0);
    auto row = out.path(i);
    double level = 0.0;
    std::uint32_t total = 0;
    row[0] = 0.0;
    for (std::size_t j = 1; j <= grid.n_steps; ++j) {
      const std::uint32_t n = rate > 0.0 ? arrivals(rng) : 0;
      for (std::uint32_t k = 0; k < n; ++k) level += sampler.sample(rng);
      level += drift;
      total += n;
      row[j] = level;
    }
    out.jump_counts[i] = total;
  }
  return out;
}

}  // namespace levyforge::processes
