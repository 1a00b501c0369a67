#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "levyforge/rng.hpp"

namespace levyforge::optim {

/// Lower is better. Non-finite returns are treated as +infinity.
using Objective = std::function<double(std::span<const double>)>;

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const noexcept { return lower.size(); }
  void clamp(std::span<double> x) const noexcept;
  bool contains(std::span<const double> x) const noexcept;
};

void validate(const Bounds& bounds);

struct Candidate {
  std::vector<double> position;
  double fitness = 0.0;
};

struct SearchConfig {
  std::size_t population = 30;
  std::size_t iterations = 100;
  std::uint64_t seed = 0;
  double fads_prob = 0.2;   // MPA fish aggregating device probability
  double mixing_p = 0.5;    // MPA step scaling constant P
};

void validate(const SearchConfig& config);

struct SearchResult {
  Candidate best;
  /// history[0] is the best initial fitness, history[i] the best after
  /// iteration i; iterations + 1 entries, non-increasing.
  std::vector<double> history;
  /// MPA phase (1, 2 or 3) of each iteration; empty for GWO.
  std::vector<int> phases;
  std::size_t evaluations = 0;
};

/// Grey wolf optimizer: a decays linearly from 2 to 0, every wolf moves to the
/// mean of its pulls toward the alpha, beta and delta leaders.
SearchResult gwo_minimize(const Objective& objective, const Bounds& bounds,
                          const SearchConfig& config);

/// Marine predators algorithm. One objective evaluation per prey per
/// iteration; the FAD perturbation is applied before evaluating.
SearchResult mpa_minimize(const Objective& objective, const Bounds& bounds,
                          const SearchConfig& config);

/// Phase of 0-based iteration `i` out of `max_iterations`: 1 below
/// ceil(max/3), 2 below ceil(2 max/3), 3 afterwards.
int mpa_phase(std::size_t i, std::size_t max_iterations) noexcept;

/// Mantegna step for a symmetric Levy distribution with the given exponent.
double mantegna_step(Rng& rng, double exponent);

/// `iteration,best_fitness` rows, one per history entry.
std::string fitness_history_csv(std::span<const double> history);

}  // namespace levyforge::optim
