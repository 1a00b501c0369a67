#include "levyforge/heston.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "levyforge/error.hpp"

namespace levyforge::processes {

void validate(const HestonParams& p) {
  for (double v : {p.mu, p.kappa, p.theta, p.xi, p.rho, p.v0, p.hurst, p.beta})
    require(std::isfinite(v), ErrorKind::domain, "Heston parameters must be finite");
  require(p.kappa > 0.0, ErrorKind::domain, "kappa must be > 0");
  require(p.theta > 0.0, ErrorKind::domain, "theta must be > 0");
  require(p.xi >= 0.0, ErrorKind::domain, "xi must be >= 0");
  require(p.rho > -1.0 && p.rho < 1.0, ErrorKind::domain, "rho must lie in (-1, 1)");
  require(p.v0 > 0.0, ErrorKind::domain, "v0 must be > 0");
  require(p.hurst >= 0.5 && p.hurst < 1.0, ErrorKind::domain, "Hurst exponent must lie in [0.5, 1)");
  require(p.beta >= 0.0 && p.beta <= 1.0, ErrorKind::domain, "beta must lie in [0, 1]");
}

double FractionalNoise::autocovariance(double hurst, double dt, std::size_t lag) {
  const double h2 = 2.0 * hurst;
  const double k = static_cast<double>(lag);
  const double shape = std::pow(k + 1.0, h2) - 2.0 * std::pow(k, h2) +
                       (lag == 0 ? 1.0 : std::pow(k - 1.0, h2));
  return 0.5 * std::pow(dt, h2) * shape;
}

FractionalNoise::FractionalNoise(double hurst, std::size_t n_steps, double dt) : hurst_(hurst) {
  require(hurst > 0.0 && hurst < 1.0, ErrorKind::domain, "Hurst exponent must lie in (0, 1)");
  require(n_steps >= 1, ErrorKind::size, "fractional noise needs at least one step");
  require(n_steps <= kMaxFbmSteps, ErrorKind::size,
          "fBM Cholesky construction is limited to " + std::to_string(kMaxFbmSteps) + " steps, got " +
              std::to_string(n_steps));
  const auto n = static_cast<Eigen::Index>(n_steps);
  std::vector<double> gamma(n_steps);
  for (std::size_t k = 0; k < n_steps; ++k) gamma[k] = autocovariance(hurst, dt, k);
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) cov(i, j) = gamma[static_cast<std::size_t>(std::abs(i - j))];
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::numerical, "Cholesky factorization of the fBM increment covariance failed (H=" +
                                          std::to_string(hurst) + ", n=" + std::to_string(n_steps) + ")");
  factor_ = llt.matrixL();
}

void FractionalNoise::colour(std::span<const double> z, std::span<double> out) const {
  const auto n = factor_.rows();
  require(static_cast<Eigen::Index>(z.size()) == n && static_cast<Eigen::Index>(out.size()) == n,
          ErrorKind::shape, "fractional noise buffer size mismatch");
  Eigen::Map<const Eigen::VectorXd> zv(z.data(), n);
  Eigen::Map<Eigen::VectorXd> ov(out.data(), n);
  ov.noalias() = factor_.triangularView<Eigen::Lower>() * zv;
}

void FractionalNoise::sample(Rng& rng, std::span<double> out) const {
  std::normal_distribution<double> normal;
  std::vector<double> z(size());
  for (double& v : z) v = normal(rng);
  colour(z, out);
}

namespace {

// Fills one path's drivers from its own stream: n normals coloured into fGn,
// then n normals for the independent part of the price driver.
void draw_drivers(const HestonParams& p, const FractionalNoise& noise, double dt, Rng& rng,
                  std::span<double> dv, std::span<double> ds) {
  const std::size_t n = dv.size();
  std::normal_distribution<double> normal;
  std::vector<double> z(n);
  for (double& v : z) v = normal(rng);
  noise.colour(z, dv);
  // Rescale the fGn increment to unit-time-variance units so the price driver
  // has N(0, dt) marginals and per-step correlation rho.
  const double to_bm = std::sqrt(dt) / std::pow(dt, p.hurst);
  const double ortho = std::sqrt(1.0 - p.rho * p.rho) * std::sqrt(dt);
  for (std::size_t i = 0; i < n; ++i) ds[i] = p.rho * dv[i] * to_bm + ortho * normal(rng);
}

}  // namespace

HestonDrivers sample_heston_drivers(const HestonParams& p, const SimGrid& grid,
                                    std::size_t n_paths, std::uint64_t seed) {
  validate(p);
  validate(grid);
  const FractionalNoise noise(p.hurst, grid.n_steps, grid.dt());
  const auto rows = static_cast<Eigen::Index>(n_paths);
  const auto cols = static_cast<Eigen::Index>(grid.n_steps);
  HestonDrivers out{Eigen::MatrixXd(rows, cols), Eigen::MatrixXd(rows, cols)};
  std::vector<double> dv(grid.n_steps), ds(grid.n_steps);
  for (std::size_t i = 0; i < n_paths; ++i) {
    Rng rng = make_stream(seed, i);
    draw_drivers(p, noise, grid.dt(), rng, dv, ds);
    for (std::size_t j = 0; j < grid.n_steps; ++j) {
      out.variance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dv[j];
      out.price(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = ds[j];
    }
  }
  return out;
}

HestonPaths simulate_fractional_heston(const HestonParams& p, const SimGrid& grid,
                                       std::size_t n_paths, std::uint64_t seed) {
  validate(p);
  validate(grid);
  const double dt = grid.dt();
  const FractionalNoise noise(p.hurst, grid.n_steps, dt);
  HestonPaths out{PathSet(grid, n_paths), PathSet(grid, n_paths)};
  std::vector<double> dv(grid.n_steps), ds(grid.n_steps);
  for (std::size_t i = 0; i < n_paths; ++i) {
    Rng rng = make_stream(seed, i);
    draw_drivers(p, noise, dt, rng, dv, ds);
    auto price = out.prices.path(i);
    auto var = out.variances.path(i);
    double x = std::log(grid.s0);
    double v = p.v0;
    price[0] = grid.s0;
    var[0] = v;
    for (std::size_t j = 0; j < grid.n_steps; ++j) {
      const double vp = std::max(v, 0.0);
      x += (p.mu - 0.5 * vp) * dt + std::sqrt(vp) * ds[j];
      v += p.kappa * (p.theta - vp) * dt + p.xi * std::pow(vp, p.beta) * dv[j];
      price[j + 1] = std::exp(x);
      var[j + 1] = std::max(v, 0.0);
    }
  }
  return out;
}

}  // namespace levyforge::processes
