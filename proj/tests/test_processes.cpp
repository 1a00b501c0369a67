#include <doctest.h>

#include <cmath>

#include "levyforge/error.hpp"
#include "levyforge/heston.hpp"
#include "levyforge/processes.hpp"
#include "support/oracles.hpp"

using namespace levyforge;
using namespace levyforge::processes;

TEST_CASE("expected jump size") {
  CHECK(expected_jump_size(0.0, 0.0) == 0.0);
  CHECK(expected_jump_size(std::log(2.0), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  // Direct evaluation gives 0.1069963; the rounded reference value 0.10686
  // agrees to about 0.13%.
  const double k = expected_jump_size(0.0004, 0.45);
  CHECK(k == doctest::Approx(std::exp(0.0004 + 0.45 * 0.45 / 2.0) - 1.0).epsilon(1e-14));
  CHECK(k == doctest::Approx(0.10686).epsilon(2e-3));
  CHECK((MertonParams{0.0, 0.2, 1.0, 0.0004, 0.45}.k()) == k);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(validate(MertonParams{0.0, -0.1, 1.0, 0.0, 0.1}), Error);
  CHECK_THROWS_AS(validate(MertonParams{0.0, 0.1, -1.0, 0.0, 0.1}), Error);
  CHECK_THROWS_AS(validate(SimGrid{0.0, 10, 1.0}), Error);
  CHECK_THROWS_AS(validate(SimGrid{1.0, 0, 1.0}), Error);
  CHECK_THROWS_AS(simulate_compound_poisson(-1.0, 0.0, 0.1, {1.0, 10, 1.0}, 2, 1), Error);
}

TEST_CASE("compound Poisson") {
  const SimGrid grid{1.0, 50, 1.0};
  SUBCASE("no intensity means no jumps") {
    const auto q = simulate_compound_poisson(0.0, 0.0, 0.1, grid, 20, 3);
    for (double v : q.values()) CHECK(v == 0.0);
  }
  SUBCASE("jump counts and compensator") {
    const std::size_t n = 20000;
    const double lambda = 10.0, m = 0.0, delta = std::sqrt(0.22);
    const auto q = simulate_compound_poisson(lambda, m, delta, grid, n, 11);
    REQUIRE(q.jump_counts.size() == n);
    std::vector<double> counts(q.jump_counts.begin(), q.jump_counts.end());
    CHECK(std::abs(oracle::mean(counts) - lambda) < 3.0 * std::sqrt(lambda / n));
    const auto qt = q.terminals();
    const double k = std::exp(m + delta * delta / 2.0) - 1.0;
    CHECK(std::abs(oracle::mean(qt) - lambda * k) < 3.0 * oracle::standard_error(qt));
    for (std::size_t i = 0; i < 5; ++i) CHECK(q.path(i)[0] == 0.0);
  }
}

TEST_CASE("Merton schemes") {
  const MertonParams p{0.05, 0.2, 10.0, 0.0, std::sqrt(0.012)};
  const SimGrid grid{1.0, 50, 100.0};

  SUBCASE("deterministic limit") {
    const MertonParams flat{0.07, 0.0, 0.0, 0.0, 0.0};
    for (auto scheme : {MertonScheme::log_euler, MertonScheme::jump_adapted}) {
      const auto s = simulate_merton(flat, {2.0, 40, 50.0}, 4, 1, scheme);
      for (std::size_t i = 0; i < 4; ++i) {
        CHECK(s.terminal(i) == doctest::Approx(50.0 * std::exp(0.14)).epsilon(1e-12));
      }
    }
  }
  SUBCASE("determinism, positivity and stream stability") {
    for (auto scheme : {MertonScheme::log_euler, MertonScheme::jump_adapted}) {
      const auto a = simulate_merton(p, grid, 30, 42, scheme);
      const auto b = simulate_merton(p, grid, 30, 42, scheme);
      CHECK(a == b);
      const auto c = simulate_merton(p, grid, 31, 42, scheme);
      for (std::size_t t = 0; t < grid.n_steps + 1; ++t) CHECK(c.path(7)[t] == a.path(7)[t]);
      const auto d = simulate_merton(p, grid, 30, 43, scheme);
      CHECK_FALSE(a == d);
      for (double v : a.values()) CHECK(v > 0.0);
      for (std::size_t i = 0; i < a.n_paths(); ++i) CHECK(a.path(i)[0] == 100.0);
      const auto tv = merton_terminals(p, grid, 30, 42, scheme);
      for (std::size_t i = 0; i < 30; ++i) CHECK(tv[i] == a.terminal(i));
    }
  }
  SUBCASE("terminal mean, moderate sample") {
    for (auto scheme : {MertonScheme::log_euler, MertonScheme::jump_adapted}) {
      const auto st = merton_terminals(p, grid, 20000, 5, scheme);
      CHECK(std::abs(oracle::mean(st) - 100.0 * std::exp(0.05)) < 3.0 * oracle::standard_error(st));
    }
  }
  SUBCASE("cumulants") {
    const auto c = merton_cumulants(p, 2.0);
    const double k = p.k();
    CHECK(c.k1 == doctest::Approx((0.05 - 10.0 * k - 0.02) * 2.0));
    CHECK(c.k2 == doctest::Approx((0.04 + 10.0 * 0.012) * 2.0));
    CHECK(c.k3 == doctest::Approx(0.0));
    CHECK(c.k4 == doctest::Approx(10.0 * 2.0 * 3.0 * 0.012 * 0.012));
  }
  SUBCASE("no-jump Merton equals GBM path for path under log-Euler") {
    const MertonParams g{0.05, 0.3, 0.0, 0.0, 0.0};
    const auto a = simulate_merton_em(g, grid, 10, 9);
    const auto b = simulate_gbm(0.05, 0.3, grid, 10, 9);
    for (std::size_t k = 0; k < a.values().size(); ++k) {
      CHECK(a.values()[k] == doctest::Approx(b.values()[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("fractional noise") {
  CHECK(FractionalNoise::autocovariance(0.5, 0.01, 0) == doctest::Approx(0.01));
  for (std::size_t lag = 1; lag < 5; ++lag) {
    CHECK(std::abs(FractionalNoise::autocovariance(0.5, 0.01, lag)) < 1e-15);
    CHECK(FractionalNoise::autocovariance(0.8, 0.01, lag) > 0.0);  // persistent increments
  }
  CHECK_THROWS_AS(FractionalNoise(0.7, kMaxFbmSteps + 1, 0.01), Error);
  try {
    FractionalNoise(0.7, kMaxFbmSteps + 1, 0.01);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::size);
  }
}

TEST_CASE("fractional Heston") {
  SUBCASE("zero vol-of-vol follows the mean-reversion ODE") {
    HestonParams p;
    p.kappa = 2.0;
    p.theta = 0.09;
    p.v0 = 0.01;
    p.xi = 0.0;
    const SimGrid grid{2.0, 200, 100.0};
    const auto h = simulate_fractional_heston(p, grid, 2, 4);
    const auto v = h.variances.path(0);
    for (std::size_t t = 1; t < v.size(); ++t) {
      CHECK(v[t] > v[t - 1]);
      CHECK(v[t] < p.theta);
    }
    CHECK(v.back() == doctest::Approx(p.theta).epsilon(0.05));
    const auto v1 = h.variances.path(1);
    for (std::size_t t = 0; t < v.size(); ++t) CHECK(v1[t] == v[t]);
  }
  SUBCASE("H = 0.5 variance increments are uncorrelated") {
    HestonParams p;
    p.hurst = 0.5;
    const auto d = sample_heston_drivers(p, {1.0, 500, 1.0}, 200, 8);
    std::vector<double> a, b;
    for (Eigen::Index i = 0; i < d.variance.rows(); ++i) {
      for (Eigen::Index t = 1; t < d.variance.cols(); ++t) {
        a.push_back(d.variance(i, t - 1));
        b.push_back(d.variance(i, t));
      }
    }
    const double ma = oracle::mean(a), mb = oracle::mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      sab += (a[k] - ma) * (b[k] - mb);
      saa += (a[k] - ma) * (a[k] - ma);
      sbb += (b[k] - mb) * (b[k] - mb);
    }
    CHECK(std::abs(sab / std::sqrt(saa * sbb)) < 0.02);
  }
  SUBCASE("driver correlation matches rho") {
    HestonParams p;
    p.rho = -0.6;
    p.hurst = 0.7;
    const auto d = sample_heston_drivers(p, {1.0, 500, 1.0}, 200, 10);
    const Eigen::ArrayXd x = Eigen::Map<const Eigen::ArrayXd>(d.variance.data(), d.variance.size());
    const Eigen::ArrayXd y = Eigen::Map<const Eigen::ArrayXd>(d.price.data(), d.price.size());
    const double corr = ((x - x.mean()) * (y - y.mean())).sum() /
                        std::sqrt((x - x.mean()).square().sum() * (y - y.mean()).square().sum());
    CHECK(corr == doctest::Approx(-0.6).epsilon(0.02 / 0.6));
  }
  SUBCASE("positivity and truncation") {
    HestonParams p;
    p.xi = 1.5;  // violates Feller, variance hits zero
    p.theta = 0.02;
    p.v0 = 0.02;
    CHECK_FALSE(p.feller_satisfied());
    const auto h = simulate_fractional_heston(p, {1.0, 252, 100.0}, 20, 2);
    for (double v : h.prices.values()) CHECK(v > 0.0);
    for (double v : h.variances.values()) CHECK(v >= 0.0);
    CHECK(h.prices == simulate_fractional_heston(p, {1.0, 252, 100.0}, 20, 2).prices);
  }
  SUBCASE("validation") {
    HestonParams p;
    p.hurst = 1.0;
    CHECK_THROWS_AS(validate(p), Error);
    p.hurst = 0.7;
    p.rho = 1.0;
    CHECK_THROWS_AS(validate(p), Error);
    p.rho = 0.0;
    p.kappa = 0.0;
    CHECK_THROWS_AS(validate(p), Error);
    CHECK_THROWS_AS(simulate_fractional_heston(HestonParams{}, {1.0, kMaxFbmSteps + 1, 1.0}, 1, 0), Error);
  }
}
