#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace levyforge::processes {

/// Merton jump-diffusion, annualized:
///   dS = S ((mu - lambda k) dt + sigma dW + dQ),  ln Y ~ N(m, delta^2).
struct MertonParams {
  double mu = 0.0;
  double sigma = 0.2;
  double lambda = 0.0;
  double m = 0.0;
  double delta = 0.0;

  /// Expected relative jump size E[Y - 1].
  double k() const noexcept;
};

/// Throws a domain error if sigma, lambda or delta is negative or any field
/// is non-finite.
void validate(const MertonParams& p);

struct SimGrid {
  double t_end = 1.0;
  std::size_t n_steps = 252;
  double s0 = 100.0;

  double dt() const noexcept { return t_end / static_cast<double>(n_steps); }
  double time(std::size_t i) const noexcept {
    return t_end * static_cast<double>(i) / static_cast<double>(n_steps);
  }

  friend bool operator==(const SimGrid&, const SimGrid&) = default;
};

void validate(const SimGrid& grid);

/// n_paths x (n_steps + 1) row-major matrix of trajectories on a regular grid.
/// Price paths start at grid.s0; level paths (jump components) start at 0.
class PathSet {
 public:
  PathSet() = default;
  PathSet(SimGrid grid, std::size_t n_paths);

  const SimGrid& grid() const noexcept { return grid_; }
  std::size_t n_paths() const noexcept { return n_paths_; }
  std::size_t n_points() const noexcept { return grid_.n_steps + 1; }

  std::span<double> path(std::size_t i) noexcept {
    return {values_.data() + i * n_points(), n_points()};
  }
  std::span<const double> path(std::size_t i) const noexcept {
    return {values_.data() + i * n_points(), n_points()};
  }
  double terminal(std::size_t i) const noexcept { return path(i).back(); }
  std::vector<double> terminals() const;

  const std::vector<double>& values() const noexcept { return values_; }

  /// Number of jumps realized on each path; empty for continuous models.
  std::vector<std::uint32_t> jump_counts;

  friend bool operator==(const PathSet&, const PathSet&) = default;

 private:
  SimGrid grid_{};
  std::size_t n_paths_ = 0;
  std::vector<double> values_;
};

/// k = exp(m + delta^2 / 2) - 1.
double expected_jump_size(double m, double delta);

/// Cumulants of ln(S_{t+h} / S_t) under the compensated Merton dynamics.
struct LogReturnCumulants {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double k4 = 0.0;
};
LogReturnCumulants merton_cumulants(const MertonParams& p, double horizon);

/// Exact GBM sampling: ln S advances by (mu - sigma^2/2) dt + sigma sqrt(dt) Z.
PathSet simulate_gbm(double mu, double sigma, const SimGrid& grid, std::size_t n_paths,
                     std::uint64_t seed);

/// Level paths of Q_t = sum_{i <= N_t} (Y_i - 1), Q_0 = 0.
PathSet simulate_compound_poisson(double lambda, double m, double delta, const SimGrid& grid,
                                  std::size_t n_paths, std::uint64_t seed);

enum class MertonScheme { log_euler, jump_adapted };

/// Log-space Euler: per grid step one Gaussian increment plus a
/// Poisson(lambda dt) number of log-normal jumps.
PathSet simulate_merton_em(const MertonParams& p, const SimGrid& grid, std::size_t n_paths,
                           std::uint64_t seed);

/// Exact Poisson arrival times superimposed on the grid; the diffusion is
/// advanced exactly between consecutive event times.
PathSet simulate_merton_jump_adapted(const MertonParams& p, const SimGrid& grid,
                                     std::size_t n_paths, std::uint64_t seed);

PathSet simulate_merton(const MertonParams& p, const SimGrid& grid, std::size_t n_paths,
                        std::uint64_t seed, MertonScheme scheme);

/// S_T for each path without storing the trajectories. Bit-identical to the
/// last column of the corresponding PathSet.
std::vector<double> merton_terminals(const MertonParams& p, const SimGrid& grid,
                                     std::size_t n_paths, std::uint64_t seed, MertonScheme scheme);

}  // namespace levyforge::processes
