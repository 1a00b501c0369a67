#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "levyforge/processes.hpp"
#include "levyforge/rng.hpp"

namespace levyforge::processes {

/// Stable law in the characteristic-function parameterization
///   E[e^{iuX}] = exp(-t (scale |u|)^alpha (1 - i beta sgn(u) tan(pi alpha / 2)) + i gamma u).
struct StableParams {
  double alpha = 1.7;
  double beta_skew = 0.0;
  double gamma_loc = 0.0;
  double scale = 1.0;
};

void validate(const StableParams& p);

/// Symmetric tempered-stable Levy density C |x|^{-1-alpha} e^{-lambda |x|}.
struct TemperedParams {
  double c_level = 1.0;
  double alpha = 0.5;
  double lambda_temper = 1.0;
};

void validate(const TemperedParams& p);

/// Chambers-Mallows-Stuck draws. alpha = 2 gives N(gamma, 2 scale^2).
/// alpha = 1 is rejected (its characteristic function takes a log branch).
std::vector<double> sample_alpha_stable(const StableParams& p, std::size_t n, std::uint64_t seed);
double sample_alpha_stable(const StableParams& p, Rng& rng);

std::complex<double> stable_cf(double u, double t, const StableParams& p);

/// Accepts lambda_temper = 0 (the plain stable Levy density).
double tempered_levy_density(double x, const TemperedParams& p);

/// Integral of (1 ^ x^2) nu(dx) over the real line: the part below
/// min(cutoff, 1) in closed form (lower incomplete gamma), the rest by adaptive
/// quadrature. Throws a numerical error if the quadrature does not converge.
double levy_integrability_check(const TemperedParams& p, double cutoff);

/// Draws signed jumps from nu restricted to |x| >= cutoff, normalized by its
/// mass Lambda. Magnitudes come from inverse-CDF interpolation on a table of
/// log-spaced nodes.
class TemperedJumpSampler {
 public:
  TemperedJumpSampler(const TemperedParams& p, double cutoff, std::size_t table_size = 8192);

  /// Lambda = nu({|x| >= cutoff}).
  double intensity() const noexcept { return intensity_; }
  /// Compensating drift for the truncated measure, -integral of x nu(dx) over
  /// |x| >= cutoff; the measure is symmetric so the value is zero.
  double compensator_drift() const noexcept { return 0.0; }
  /// Integral of x^2 nu(dx) over |x| >= cutoff.
  double large_jump_variance() const noexcept { return second_moment_; }
  double cutoff() const noexcept { return cutoff_; }

  double sample(Rng& rng) const;
  double magnitude_from_uniform(double u) const;

 private:
  double cutoff_;
  double intensity_ = 0.0;
  double second_moment_ = 0.0;
  std::vector<double> log_nodes_;
  std::vector<double> cdf_;  // normalized cumulative mass, one-sided
};

inline constexpr double kDefaultSmallJumpCutoff = 1e-3;

/// Level paths of the compensated large-jump component of a tempered-stable
/// process: Poisson(Lambda dt) jumps per step plus the compensating drift.
PathSet simulate_tempered_jumps(const TemperedParams& p, const SimGrid& grid, std::size_t n_paths,
                                std::uint64_t seed, double small_jump_cutoff = kDefaultSmallJumpCutoff);

}  // namespace levyforge::processes
