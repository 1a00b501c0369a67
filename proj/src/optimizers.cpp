#include "levyforge/optimizers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "levyforge/error.hpp"

namespace levyforge::optim {

void Bounds::clamp(std::span<double> x) const noexcept {
  for (std::size_t j = 0; j < x.size() && j < lower.size(); ++j) {
    x[j] = std::clamp(x[j], lower[j], upper[j]);
  }
}

bool Bounds::contains(std::span<const double> x) const noexcept {
  if (x.size() != lower.size()) return false;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(x[j] >= lower[j] && x[j] <= upper[j])) return false;
  }
  return true;
}

void validate(const Bounds& bounds) {
  require(!bounds.lower.empty(), ErrorKind::shape, "bounds are empty");
  require(bounds.lower.size() == bounds.upper.size(), ErrorKind::shape,
          "lower and upper bounds differ in length");
  for (std::size_t j = 0; j < bounds.dim(); ++j) {
    require(std::isfinite(bounds.lower[j]) && std::isfinite(bounds.upper[j]) &&
                bounds.lower[j] < bounds.upper[j],
            ErrorKind::domain, "bound " + std::to_string(j) + " must satisfy lower < upper");
  }
}

void validate(const SearchConfig& config) {
  require(config.population >= 4, ErrorKind::domain, "population must be at least 4");
  require(config.iterations >= 1, ErrorKind::domain, "iterations must be at least 1");
  require(config.fads_prob >= 0.0 && config.fads_prob <= 1.0, ErrorKind::domain,
          "fads_prob must lie in [0, 1]");
  require(config.mixing_p > 0.0, ErrorKind::domain, "mixing constant P must be positive");
}

int mpa_phase(std::size_t i, std::size_t max_iterations) noexcept {
  const std::size_t first = (max_iterations + 2) / 3;
  const std::size_t second = (2 * max_iterations + 2) / 3;
  if (i < first) return 1;
  if (i < second) return 2;
  return 3;
}

double mantegna_step(Rng& rng, double exponent) {
  const double b = exponent;
  const double sigma_u =
      std::pow(std::tgamma(1.0 + b) * std::sin(std::numbers::pi * b / 2.0) /
                   (std::tgamma((1.0 + b) / 2.0) * b * std::pow(2.0, (b - 1.0) / 2.0)),
               1.0 / b);
  std::normal_distribution<double> n01(0.0, 1.0);
  const double u = n01(rng) * sigma_u;
  const double v = n01(rng);
  return u / std::pow(std::abs(v), 1.0 / b);
}

std::string fitness_history_csv(std::span<const double> history) {
  std::string out = "iteration,best_fitness\n";
  char buf[64];
  for (std::size_t i = 0; i < history.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, history[i]);
    out += buf;
  }
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Population {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> x;  // row-major n x d
  std::vector<double> fitness;

  std::span<double> row(std::size_t i) { return {x.data() + i * d, d}; }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * d, d}; }
};

class Evaluator {
 public:
  explicit Evaluator(const Objective& f) : f_(f) {}

  double operator()(std::span<const double> x) {
    ++calls_;
    const double v = f_(x);
    return std::isfinite(v) ? v : kInf;
  }
  std::size_t calls() const noexcept { return calls_; }

 private:
  const Objective& f_;
  std::size_t calls_ = 0;
};

Population initial_population(const Bounds& bounds, std::size_t n, Rng& rng, Evaluator& eval) {
  Population pop{n, bounds.dim(), std::vector<double>(n * bounds.dim()), std::vector<double>(n)};
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = pop.row(i);
    for (std::size_t j = 0; j < pop.d; ++j) {
      r[j] = bounds.lower[j] + u01(rng) * (bounds.upper[j] - bounds.lower[j]);
    }
    bounds.clamp(r);
  }
  for (std::size_t i = 0; i < n; ++i) pop.fitness[i] = eval(pop.row(i));
  const bool any_finite = std::any_of(pop.fitness.begin(), pop.fitness.end(),
                                      [](double f) { return f < kInf; });
  require(any_finite, ErrorKind::search, "objective is non-finite at every initial point");
  return pop;
}

void check_inputs(const Objective& objective, const Bounds& bounds, const SearchConfig& config) {
  require(static_cast<bool>(objective), ErrorKind::contract, "objective is empty");
  validate(bounds);
  validate(config);
}

std::size_t argmin(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

SearchResult gwo_minimize(const Objective& objective, const Bounds& bounds,
                          const SearchConfig& config) {
  check_inputs(objective, bounds, config);
  Rng rng = make_stream(config.seed, 0);
  Evaluator eval(objective);
  Population pop = initial_population(bounds, config.population, rng, eval);
  const std::size_t d = pop.d;

  // Leaders are the three best points seen so far, kept in order.
  struct Leader {
    std::vector<double> x;
    double f = kInf;
  };
  std::array<Leader, 3> leaders;
  auto offer = [&](std::span<const double> x, double f) {
    for (std::size_t k = 0; k < 3; ++k) {
      if (f < leaders[k].f) {
        for (std::size_t m = 2; m > k; --m) leaders[m] = leaders[m - 1];
        leaders[k] = Leader{std::vector<double>(x.begin(), x.end()), f};
        return;
      }
    }
  };
  for (auto& l : leaders) l.x = std::vector<double>(pop.row(0).begin(), pop.row(0).end());
  for (std::size_t i = 0; i < pop.n; ++i) offer(pop.row(i), pop.fitness[i]);
  for (std::size_t k = 1; k < 3; ++k) {
    if (leaders[k].f == kInf) leaders[k].x = leaders[k - 1].x;
  }

  SearchResult result;
  result.history.reserve(config.iterations + 1);
  result.history.push_back(leaders[0].f);

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double T = static_cast<double>(config.iterations);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    const double a = 2.0 - 2.0 * static_cast<double>(it) / T;
    for (std::size_t i = 0; i < pop.n; ++i) {
      auto x = pop.row(i);
      for (std::size_t j = 0; j < d; ++j) {
        double sum = 0.0;
        for (const Leader& l : leaders) {
          const double A = 2.0 * a * u01(rng) - a;
          const double C = 2.0 * u01(rng);
          const double D = std::abs(C * l.x[j] - x[j]);
          sum += l.x[j] - A * D;
        }
        x[j] = sum / 3.0;
      }
      bounds.clamp(x);
    }
    for (std::size_t i = 0; i < pop.n; ++i) pop.fitness[i] = eval(pop.row(i));
    for (std::size_t i = 0; i < pop.n; ++i) offer(pop.row(i), pop.fitness[i]);
    result.history.push_back(leaders[0].f);
  }
  result.best = Candidate{leaders[0].x, leaders[0].f};
  result.evaluations = eval.calls();
  return result;
}

SearchResult mpa_minimize(const Objective& objective, const Bounds& bounds,
                          const SearchConfig& config) {
  check_inputs(objective, bounds, config);
  Rng rng = make_stream(config.seed, 0);
  Evaluator eval(objective);
  Population pop = initial_population(bounds, config.population, rng, eval);
  const std::size_t n = pop.n;
  const std::size_t d = pop.d;
  const double P = config.mixing_p;
  const double fads = config.fads_prob;

  std::size_t top = argmin(pop.fitness);
  std::vector<double> elite(pop.row(top).begin(), pop.row(top).end());
  double elite_f = pop.fitness[top];

  SearchResult result;
  result.history.reserve(config.iterations + 1);
  result.phases.reserve(config.iterations);
  result.history.push_back(elite_f);

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  Population memory = pop;
  const double T = static_cast<double>(config.iterations);

  for (std::size_t it = 0; it < config.iterations; ++it) {
    const double frac = static_cast<double>(it) / T;
    const double CF = std::pow(1.0 - frac, 2.0 * frac);
    const int phase = mpa_phase(it, config.iterations);
    result.phases.push_back(phase);

    for (std::size_t i = 0; i < n; ++i) {
      auto x = pop.row(i);
      for (std::size_t j = 0; j < d; ++j) {
        const double R = u01(rng);
        if (phase == 1) {
          const double RB = n01(rng);
          const double step = RB * (elite[j] - RB * x[j]);
          x[j] += P * R * step;
        } else if (phase == 2 && i < n / 2) {
          const double RL = 0.05 * mantegna_step(rng, 1.5);
          const double step = RL * (elite[j] - RL * x[j]);
          x[j] += P * R * step;
        } else if (phase == 2) {
          const double RB = n01(rng);
          const double step = RB * (RB * elite[j] - x[j]);
          x[j] = elite[j] + P * CF * step;
        } else {
          const double RL = 0.05 * mantegna_step(rng, 1.5);
          const double step = RL * (RL * elite[j] - x[j]);
          x[j] = elite[j] + P * CF * step;
        }
      }
      bounds.clamp(x);
    }

    // Eddy formation and FADs.
    if (u01(rng) < fads) {
      for (std::size_t i = 0; i < n; ++i) {
        auto x = pop.row(i);
        for (std::size_t j = 0; j < d; ++j) {
          const double jump = bounds.lower[j] + u01(rng) * (bounds.upper[j] - bounds.lower[j]);
          if (u01(rng) < fads) x[j] += CF * jump;
        }
        bounds.clamp(x);
      }
    } else {
      const double r = u01(rng);
      const double scale = fads * (1.0 - r) + r;
      const Population snapshot = pop;
      for (std::size_t i = 0; i < n; ++i) {
        const auto a = snapshot.row(pick(rng));
        const auto b = snapshot.row(pick(rng));
        auto x = pop.row(i);
        for (std::size_t j = 0; j < d; ++j) x[j] += scale * (a[j] - b[j]);
        bounds.clamp(x);
      }
    }

    for (std::size_t i = 0; i < n; ++i) pop.fitness[i] = eval(pop.row(i));

    // Marine memory: a prey that got worse returns to its previous spot.
    for (std::size_t i = 0; i < n; ++i) {
      if (memory.fitness[i] < pop.fitness[i]) {
        std::copy(memory.row(i).begin(), memory.row(i).end(), pop.row(i).begin());
        pop.fitness[i] = memory.fitness[i];
      }
    }
    memory = pop;

    top = argmin(pop.fitness);
    if (pop.fitness[top] < elite_f) {
      elite_f = pop.fitness[top];
      elite.assign(pop.row(top).begin(), pop.row(top).end());
    }
    result.history.push_back(elite_f);
  }
  result.best = Candidate{elite, elite_f};
  result.evaluations = eval.calls();
  return result;
}

}  // namespace levyforge::optim
