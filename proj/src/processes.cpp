#include "levyforge/processes.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "levyforge/error.hpp"
#include "levyforge/rng.hpp"

namespace levyforge::processes {

double MertonParams::k() const noexcept { return std::exp(m + 0.5 * delta * delta) - 1.0; }

void validate(const MertonParams& p) {
  require(std::isfinite(p.mu) && std::isfinite(p.sigma) && std::isfinite(p.lambda) &&
              std::isfinite(p.m) && std::isfinite(p.delta),
          ErrorKind::domain, "Merton parameters must be finite");
  require(p.sigma >= 0.0, ErrorKind::domain, "Merton sigma must be >= 0");
  require(p.lambda >= 0.0, ErrorKind::domain, "Merton lambda must be >= 0");
  require(p.delta >= 0.0, ErrorKind::domain, "Merton delta must be >= 0");
}

void validate(const SimGrid& grid) {
  require(std::isfinite(grid.t_end) && grid.t_end > 0.0, ErrorKind::domain, "t_end must be > 0");
  require(grid.n_steps > 0, ErrorKind::domain, "n_steps must be positive");
  require(std::isfinite(grid.s0) && grid.s0 > 0.0, ErrorKind::domain, "s0 must be > 0");
}

PathSet::PathSet(SimGrid grid, std::size_t n_paths)
    : grid_(grid), n_paths_(n_paths), values_(n_paths * (grid.n_steps + 1), 0.0) {}

std::vector<double> PathSet::terminals() const {
  std::vector<double> out(n_paths_);
  for (std::size_t i = 0; i < n_paths_; ++i) out[i] = terminal(i);
  return out;
}

double expected_jump_size(double m, double delta) {
  require(delta >= 0.0, ErrorKind::domain, "delta must be >= 0");
  return std::exp(m + 0.5 * delta * delta) - 1.0;
}

LogReturnCumulants merton_cumulants(const MertonParams& p, double h) {
  const double m2 = p.m * p.m, d2 = p.delta * p.delta;
  const double jh = p.lambda * h;
  LogReturnCumulants c;
  c.k1 = (p.mu - p.lambda * p.k() - 0.5 * p.sigma * p.sigma) * h + jh * p.m;
  c.k2 = p.sigma * p.sigma * h + jh * (m2 + d2);
  c.k3 = jh * (m2 * p.m + 3.0 * p.m * d2);
  c.k4 = jh * (m2 * m2 + 6.0 * m2 * d2 + 3.0 * d2 * d2);
  return c;
}

namespace {

// Writes either every grid point or only the terminal value of a path.
struct PathSink {
  std::span<double> row;  // empty when only the terminal is wanted
  double terminal = 0.0;

  void put(std::size_t i, double value) noexcept {
    if (!row.empty()) row[i] = value;
    terminal = value;
  }
};

std::uint32_t merton_euler_path(const MertonParams& p, const SimGrid& grid, std::uint64_t seed,
                                std::size_t index, PathSink& sink) {
  Rng rng = make_stream(seed, index);
  std::normal_distribution<double> normal;
  const double dt = grid.dt();
  const double drift = (p.mu - p.lambda * p.k() - 0.5 * p.sigma * p.sigma) * dt;
  const double vol = p.sigma * std::sqrt(dt);
  const bool jumps = p.lambda > 0.0;
  std::poisson_distribution<std::uint32_t> arrivals(jumps ? p.lambda * dt : 1.0);

  std::uint32_t total_jumps = 0;
  double x = std::log(grid.s0);
  sink.put(0, grid.s0);
  for (std::size_t i = 1; i <= grid.n_steps; ++i) {
    x += drift + vol * normal(rng);
    if (jumps) {
      const std::uint32_t n = arrivals(rng);
      if (n > 0) {
        const double dn = static_cast<double>(n);
        x += dn * p.m + p.delta * std::sqrt(dn) * normal(rng);
        total_jumps += n;
      }
    }
    sink.put(i, std::exp(x));
  }
  return total_jumps;
}

std::uint32_t merton_adapted_path(const MertonParams& p, const SimGrid& grid, std::uint64_t seed,
                                  std::size_t index, PathSink& sink) {
  Rng rng = make_stream(seed, index);
  std::normal_distribution<double> normal;
  const double drift = p.mu - p.lambda * p.k() - 0.5 * p.sigma * p.sigma;
  const bool jumps = p.lambda > 0.0;
  std::exponential_distribution<double> gap(jumps ? p.lambda : 1.0);
  auto advance = [&](double& x, double h) { x += drift * h + p.sigma * std::sqrt(h) * normal(rng); };

  std::uint32_t total_jumps = 0;
  double next_jump = jumps ? gap(rng) : std::numeric_limits<double>::infinity();
  double t = 0.0;
  double x = std::log(grid.s0);
  sink.put(0, grid.s0);
  for (std::size_t i = 1; i <= grid.n_steps; ++i) {
    const double t_next = grid.time(i);
    while (next_jump <= t_next) {
      advance(x, next_jump - t);
      x += p.m + p.delta * normal(rng);
      t = next_jump;
      ++total_jumps;
      next_jump += gap(rng);
    }
    advance(x, t_next - t);
    t = t_next;
    sink.put(i, std::exp(x));
  }
  return total_jumps;
}

template <class Kernel>
PathSet fill_paths(const SimGrid& grid, std::size_t n_paths, Kernel&& kernel) {
  PathSet out(grid, n_paths);
  out.jump_counts.resize(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) {
    PathSink sink{out.path(i)};
    out.jump_counts[i] = kernel(i, sink);
  }
  return out;
}

}  // namespace

PathSet simulate_gbm(double mu, double sigma, const SimGrid& grid, std::size_t n_paths,
                     std::uint64_t seed) {
  validate(grid);
  require(std::isfinite(mu) && sigma >= 0.0, ErrorKind::domain, "GBM needs finite mu, sigma >= 0");
  PathSet out(grid, n_paths);
  const double dt = grid.dt();
  const double drift = (mu - 0.5 * sigma * sigma) * dt;
  const double vol = sigma * std::sqrt(dt);
  for (std::size_t p = 0; p < n_paths; ++p) {
    Rng rng = make_stream(seed, p);
    std::normal_distribution<double> normal;
    auto row = out.path(p);
    double x = std::log(grid.s0);
    row[0] = grid.s0;
    for (std::size_t i = 1; i <= grid.n_steps; ++i) {
      x += drift + vol * normal(rng);
      row[i] = std::exp(x);
    }
  }
  return out;
}

PathSet simulate_compound_poisson(double lambda, double m, double delta, const SimGrid& grid,
                                  std::size_t n_paths, std::uint64_t seed) {
  validate(grid);
  require(lambda >= 0.0, ErrorKind::domain, "jump intensity must be >= 0");
  require(delta >= 0.0, ErrorKind::domain, "jump log-size std must be >= 0");
  const double dt = grid.dt();
  return fill_paths(grid, n_paths, [&](std::size_t index, PathSink& sink) {
    Rng rng = make_stream(seed, index);
    std::normal_distribution<double> normal;
    std::poisson_distribution<std::uint32_t> arrivals(lambda > 0.0 ? lambda * dt : 1.0);
    std::uint32_t total = 0;
    double q = 0.0;
    sink.put(0, 0.0);
    for (std::size_t i = 1; i <= grid.n_steps; ++i) {
      const std::uint32_t n = lambda > 0.0 ? arrivals(rng) : 0;
      for (std::uint32_t j = 0; j < n; ++j) q += std::exp(m + delta * normal(rng)) - 1.0;
      total += n;
      sink.put(i, q);
    }
    return total;
  });
}

PathSet simulate_merton_em(const MertonParams& p, const SimGrid& grid, std::size_t n_paths,
                           std::uint64_t seed) {
  validate(p);
  validate(grid);
  return fill_paths(grid, n_paths, [&](std::size_t i, PathSink& sink) {
    return merton_euler_path(p, grid, seed, i, sink);
  });
}

PathSet simulate_merton_jump_adapted(const MertonParams& p, const SimGrid& grid,
                                     std::size_t n_paths, std::uint64_t seed) {
  validate(p);
  validate(grid);
  return fill_paths(grid, n_paths, [&](std::size_t i, PathSink& sink) {
    return merton_adapted_path(p, grid, seed, i, sink);
  });
}

PathSet simulate_merton(const MertonParams& p, const SimGrid& grid, std::size_t n_paths,
                        std::uint64_t seed, MertonScheme scheme) {
  return scheme == MertonScheme::log_euler ? simulate_merton_em(p, grid, n_paths, seed)
                                           : simulate_merton_jump_adapted(p, grid, n_paths, seed);
}

std::vector<double> merton_terminals(const MertonParams& p, const SimGrid& grid,
                                     std::size_t n_paths, std::uint64_t seed,
                                     MertonScheme scheme) {
  validate(p);
  validate(grid);
  std::vector<double> out(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) {
    PathSink sink{};
    if (scheme == MertonScheme::log_euler)
      merton_euler_path(p, grid, seed, i, sink);
    else
      merton_adapted_path(p, grid, seed, i, sink);
    out[i] = sink.terminal;
  }
  return out;
}

}  // namespace levyforge::processes
