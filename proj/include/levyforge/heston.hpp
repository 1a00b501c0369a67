#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "levyforge/processes.hpp"
#include "levyforge/rng.hpp"

namespace levyforge::processes {

/// Heston dynamics whose variance is driven by fractional Brownian motion:
///   dS = mu S dt + sqrt(v) S dW^S
///   dv = kappa (theta - v) dt + xi v^beta dB^H
/// with corr(dW^S, dB^H) = rho per step.
struct HestonParams {
  double mu = 0.0;
  double kappa = 1.0;
  double theta = 0.04;
  double xi = 0.3;
  double rho = -0.5;
  double v0 = 0.04;
  double hurst = 0.7;
  double beta = 0.5;

  bool feller_satisfied() const noexcept { return 2.0 * kappa * theta >= xi * xi; }
};

/// H = 0.5 (the classical Brownian driver) is accepted as the limit case.
void validate(const HestonParams& p);

inline constexpr std::size_t kMaxFbmSteps = 4096;

/// Exact sampler of fractional Gaussian noise (fBM increments) on a regular
/// grid via the Cholesky factor of the increment covariance.
class FractionalNoise {
 public:
  FractionalNoise(double hurst, std::size_t n_steps, double dt);

  /// Increment covariance gamma(k) = dt^{2H}/2 (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}).
  static double autocovariance(double hurst, double dt, std::size_t lag);

  std::size_t size() const noexcept { return static_cast<std::size_t>(factor_.rows()); }
  double hurst() const noexcept { return hurst_; }

  /// out = L z for a standard-normal vector z drawn from `rng`.
  void sample(Rng& rng, std::span<double> out) const;
  /// out = L z for caller-provided z.
  void colour(std::span<const double> z, std::span<double> out) const;

 private:
  double hurst_;
  Eigen::MatrixXd factor_;
};

/// Driving increments of one simulation: fBM increments for the variance and
/// the per-step correlated Brownian increments for the price.
struct HestonDrivers {
  Eigen::MatrixXd variance;  // n_paths x n_steps, fGn with variance dt^{2H}
  Eigen::MatrixXd price;     // n_paths x n_steps, N(0, dt) marginals
};

HestonDrivers sample_heston_drivers(const HestonParams& p, const SimGrid& grid,
                                    std::size_t n_paths, std::uint64_t seed);

struct HestonPaths {
  PathSet prices;
  PathSet variances;  // effective variance max(v, 0) at each grid point
};

/// Full-truncation log-Euler scheme. Path i consumes the same random stream
/// as row i of sample_heston_drivers.
HestonPaths simulate_fractional_heston(const HestonParams& p, const SimGrid& grid,
                                       std::size_t n_paths, std::uint64_t seed);

}  // namespace levyforge::processes
