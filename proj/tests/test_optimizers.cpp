#include <doctest.h>

#include <cmath>
#include <random>
#include <limits>

#include "levyforge/error.hpp"
#include "levyforge/optimizers.hpp"

using namespace levyforge;
using namespace levyforge::optim;

namespace {

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double rosenbrock(std::span<const double> x) {
  return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
}

Bounds box(std::size_t d, double lo, double hi) {
  return {std::vector<double>(d, lo), std::vector<double>(d, hi)};
}

bool non_increasing(const std::vector<double>& h) {
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (h[i] > h[i - 1]) return false;
  }
  return true;
}

using Minimizer = SearchResult (*)(const Objective&, const Bounds&, const SearchConfig&);

}  // namespace

TEST_CASE("benchmarks") {
  const auto g = gwo_minimize(sphere, box(4, -5, 5), {20, 100, 1});
  CHECK(g.best.fitness < 1e-3);
  CHECK(g.history.size() == 101);
  CHECK(non_increasing(g.history));
  CHECK(g.phases.empty());

  const auto m = mpa_minimize(sphere, box(4, -5, 5), {25, 150, 1});
  CHECK(m.best.fitness < 1e-3);
  CHECK(non_increasing(m.history));

  const auto r = mpa_minimize(rosenbrock, box(2, -5, 5), {30, 500, 1});
  CHECK(r.best.fitness < 1e-2);
  CHECK(non_increasing(r.history));
}

TEST_CASE("phase schedule") {
  for (std::size_t max : {1u, 2u, 3u, 4u, 10u, 150u, 500u, 1000u}) {
    const std::size_t a = (max + 2) / 3, b = (2 * max + 2) / 3;  // ceilings
    for (std::size_t i = 0; i < max; ++i) {
      const int expected = i < a ? 1 : (i < b ? 2 : 3);
      CHECK(mpa_phase(i, max) == expected);
    }
  }
  const auto r = mpa_minimize(sphere, box(2, -1, 1), {6, 10, 2});
  CHECK(r.phases == std::vector<int>{1, 1, 1, 1, 2, 2, 2, 3, 3, 3});
}

TEST_CASE("shared contracts") {
  for (Minimizer run : {&gwo_minimize, &mpa_minimize}) {
    SUBCASE("budget, bounds and determinism") {
      std::size_t calls = 0;
      bool inside = true;
      const Bounds b{{-2.0, 0.0, 10.0}, {1.0, 0.5, 11.0}};
      auto f = [&](std::span<const double> x) {
        ++calls;
        inside = inside && b.contains(x);
        return sphere(x) + std::sin(7.0 * x[0]);
      };
      const SearchConfig cfg{7, 13, 99};
      const auto r1 = run(f, b, cfg);
      CHECK(calls == 7 * 14);
      CHECK(r1.evaluations == calls);
      CHECK(inside);
      CHECK(b.contains(r1.best.position));
      const auto r2 = run(f, b, cfg);
      CHECK(r1.history == r2.history);
      CHECK(r1.best.position == r2.best.position);
      const auto r3 = run(f, b, {7, 13, 100});
      CHECK(r3.history != r1.history);
    }
    SUBCASE("flat landscape") {
      const auto r = run([](std::span<const double>) { return 4.5; }, box(3, 0, 1), {5, 4, 0});
      CHECK(r.best.fitness == 4.5);
      CHECK(box(3, 0, 1).contains(r.best.position));
    }
    SUBCASE("non-finite everywhere") {
      try {
        run([](std::span<const double>) { return std::numeric_limits<double>::quiet_NaN(); }, box(2, 0, 1),
            {5, 3, 0});
        FAIL("expected an error");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::search);
      }
    }
    SUBCASE("partially non-finite objective") {
      const auto r = run([](std::span<const double> x) { return x[0] > 0.5 ? INFINITY : sphere(x); },
                         box(2, 0, 1), {10, 20, 3});
      CHECK(std::isfinite(r.best.fitness));
      CHECK(r.best.position[0] <= 0.5);
    }
    SUBCASE("invalid inputs") {
      CHECK_THROWS_AS(run(sphere, box(2, 0, 1), {3, 5, 0}), Error);
      CHECK_THROWS_AS(run(sphere, box(2, 0, 1), {5, 0, 0}), Error);
      CHECK_THROWS_AS(run(sphere, {{0.0, 1.0}, {1.0, 1.0}}, {5, 5, 0}), Error);
      CHECK_THROWS_AS(run(sphere, {{0.0}, {1.0, 2.0}}, {5, 5, 0}), Error);
    }
  }
}

TEST_CASE("mantegna steps are heavy tailed and symmetric") {
  Rng rng(5);
  std::size_t big = 0, positive = 0;
  const std::size_t n = 100000;
  for (std::size_t k = 0; k < n; ++k) {
    const double s = mantegna_step(rng, 1.5);
    big += std::abs(s) > 10.0;
    positive += s > 0.0;
  }
  // P(|X| > 10) for a 1.5-stable tail is far above the Gaussian value.
  CHECK(big > 100);
  CHECK(std::abs(static_cast<double>(positive) / n - 0.5) < 0.01);
}

TEST_CASE("fitness history csv") {
  CHECK(fitness_history_csv(std::vector<double>{3.0, 1.5}) == "iteration,best_fitness\n0,3\n1,1.5\n");
}
