#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "levyforge/error.hpp"
#include "levyforge/forecast.hpp"
#include "levyforge/rng.hpp"
#include "support/oracles.hpp"

using namespace levyforge;
using namespace levyforge::forecast;

namespace {

// AR(1) trajectories x_{t+1} = 0.8 x_t cut into windows of `lookback`.
data::WindowedDataset ar1_windows(std::size_t lookback, std::uint64_t seed, int n_traj = 40) {
  data::WindowedDataset ds;
  Rng rng(seed);
  std::uniform_real_distribution<double> start(-1.0, 1.0);
  for (int k = 0; k < n_traj; ++k) {
    std::vector<double> x{start(rng)};
    for (std::size_t t = 0; t < lookback + 2; ++t) x.push_back(0.8 * x.back());
    data::append(ds, data::make_windows(x, lookback, 1));
  }
  return ds;
}

}  // namespace

TEST_CASE("metrics") {
  const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
  const auto perfect = compute_metrics(a, a);
  CHECK(perfect.mae == 0.0);
  CHECK(perfect.mse == 0.0);
  CHECK(perfect.rmse == 0.0);
  CHECK(perfect.mspe == 0.0);
  CHECK(perfect.r2 == 1.0);
  CHECK(compute_metrics(std::vector<double>(4, 2.5), a).r2 == doctest::Approx(0.0).epsilon(1e-15));

  const auto m = compute_metrics(std::vector<double>{1, 2}, std::vector<double>{2, 4});
  CHECK(m.mae == doctest::Approx(1.5));
  CHECK(m.mse == doctest::Approx(2.5));
  CHECK(m.rmse == doctest::Approx(std::sqrt(2.5)));
  CHECK(m.rmse == doctest::Approx(1.5811).epsilon(1e-4));
  CHECK(m.mspe == doctest::Approx(0.25));
  CHECK(m.r2 == doctest::Approx(-1.5));

  CHECK_THROWS_AS(compute_metrics(std::vector<double>{1, 2}, std::vector<double>{0, 4}), Error);
  CHECK_THROWS_AS(compute_metrics(std::vector<double>{1, 2}, std::vector<double>{3, 3}), Error);
  CHECK_THROWS_AS(compute_metrics(std::vector<double>{1, 2}, std::vector<double>{3}), Error);

  SUBCASE("permutation covariance and rmse identity") {
    Rng rng(3);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    std::vector<double> p(50), q(50);
    for (auto& v : p) v = u(rng);
    for (auto& v : q) v = u(rng);
    const auto base = compute_metrics(p, q);
    CHECK(std::abs(base.rmse * base.rmse - base.mse) < 1e-12);
    std::reverse(p.begin(), p.end());
    std::reverse(q.begin(), q.end());
    const auto rev = compute_metrics(p, q);
    CHECK(rev.mae == doctest::Approx(base.mae).epsilon(1e-14));
    CHECK(rev.r2 == doctest::Approx(base.r2).epsilon(1e-14));
    CHECK(base.r2 <= 1.0);
  }
}

TEST_CASE("quantile") {
  const std::vector<double> x{5, 1, 4, 2, 3};
  CHECK(quantile(x, 0.0) == 1.0);
  CHECK(quantile(x, 1.0) == 5.0);
  CHECK(quantile(x, 0.5) == 3.0);
  CHECK(quantile(x, 0.1) == doctest::Approx(1.4));
  CHECK(quantile(std::vector<double>{2.0}, 0.3) == 2.0);
}

TEST_CASE("hybrid forecast") {
  const processes::MertonParams p{0.05, 0.2, 10.0, 0.0, 0.11};
  const std::vector<double> anchors{100.0, 101.0, 99.5, 102.0};
  const std::vector<double> lstm{100.5, 100.2, 100.0, 101.0};

  SUBCASE("weight one returns the lstm point") {
    const auto r = hybrid_forecast(lstm, p, anchors, {1.0, 500, 0.05, 0.95, 1});
    CHECK(r.point == lstm);
    CHECK(r.horizon == 4);
  }
  SUBCASE("deterministic Merton mean") {
    const auto r = hybrid_forecast(lstm, {0.05, 0.0, 0.0, 0.0, 0.0}, anchors, {0.0, 50, 0.05, 0.95, 1});
    for (std::size_t t = 0; t < anchors.size(); ++t) {
      CHECK(r.point[t] == doctest::Approx(anchors[t] * std::exp(0.05 / 252.0)).epsilon(1e-13));
    }
  }
  SUBCASE("convex combination and band ordering") {
    const auto r = hybrid_forecast(lstm, p, anchors, {0.3, 2000, 0.05, 0.95, 4});
    const auto wide = hybrid_forecast(lstm, p, anchors, {0.3, 2000, 0.01, 0.99, 4});
    const auto narrow = hybrid_forecast(lstm, p, anchors, {0.3, 2000, 0.10, 0.90, 4});
    for (std::size_t t = 0; t < anchors.size(); ++t) {
      CHECK(r.point[t] >= std::min(lstm[t], r.mc_mean[t]));
      CHECK(r.point[t] <= std::max(lstm[t], r.mc_mean[t]));
      CHECK(r.point[t] == doctest::Approx(0.3 * lstm[t] + 0.7 * r.mc_mean[t]));
      CHECK(r.lower[t] <= r.point[t]);
      CHECK(r.point[t] <= r.upper[t]);
      CHECK(wide.lower[t] <= r.lower[t]);
      CHECK(wide.upper[t] >= r.upper[t]);
      CHECK(narrow.lower[t] >= r.lower[t]);
      CHECK(narrow.upper[t] <= r.upper[t]);
    }
    const auto again = hybrid_forecast(lstm, p, anchors, {0.3, 2000, 0.05, 0.95, 4});
    CHECK(again.point == r.point);
    CHECK(again.lower == r.lower);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(hybrid_forecast(lstm, {0.0, -0.1, 0.0, 0.0, 0.0}, anchors, {}), Error);
    CHECK_THROWS_AS(hybrid_forecast(lstm, p, std::vector<double>{1.0}, {}), Error);
    CHECK_THROWS_AS(hybrid_forecast(lstm, p, anchors, {1.5}), Error);
  }
}

TEST_CASE("walk-forward lstm forecast") {
  Rng rng(8);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> prices{100.0};
  for (int t = 0; t < 200; ++t) prices.push_back(prices.back() * std::exp(0.01 * z(rng)));
  const auto model = fit_forecaster(std::span<const double>(prices.data(), 150), 5, {8, 0.02, 60, 1});

  CHECK(rolling_lstm_forecast(model, prices, 0).empty());
  const auto f = rolling_lstm_forecast(model, prices, 50);
  REQUIRE(f.size() == 50);
  for (double v : f) CHECK(std::isfinite(v));
  CHECK_THROWS_AS(rolling_lstm_forecast(model, std::span<const double>(prices.data(), 10), 6), Error);

  SUBCASE("future values are never read") {
    for (std::size_t t = 0; t < 50; ++t) {
      auto poisoned = prices;
      const std::size_t target = prices.size() - 50 + t;
      for (std::size_t k = target; k < poisoned.size(); ++k) poisoned[k] = 1e9;
      CHECK(rolling_lstm_forecast(model, poisoned, 50)[t] == f[t]);
    }
  }
  SUBCASE("forecast uses the scaled window") {
    std::vector<double> w(5);
    for (int k = 0; k < 5; ++k) w[k] = model.input_scaler.transform(prices[196 - 5 + k]);
    CHECK(f[45] == model.target_scaler.inverse(neural::lstm_predict(model.weights, w)));
  }
}

TEST_CASE("constant series forecast") {
  LstmForecaster model{neural::LstmWeights::zeros(1, 4), {100.0, 10.0}, {50.0, 150.0}, 4, {}};
  data::WindowedDataset ds;
  ds.lookback = 4;
  ds.horizon = 1;
  for (int k = 0; k < 10; ++k) {
    ds.inputs.push_back(std::vector<double>(4, model.input_scaler.transform(100.0)));
    ds.targets.push_back({model.target_scaler.transform(100.0)});
  }
  model.weights = neural::train_lstm(ds, {4, 0.05, 300, 2}).weights;
  const std::vector<double> flat(30, 100.0);
  for (double v : rolling_lstm_forecast(model, flat, 10)) CHECK(std::abs(v - 100.0) < 1.0);
}

TEST_CASE("tuning") {
  const auto ds = ar1_windows(4, 5);
  SUBCASE("single-point box") {
    HyperBox box{{6, 6}, {-2.0, -2.0}, {3, 3}, {40, 40}};
    const auto r = tune_lstm(ds, box, {5, 2, 11});
    CHECK(r.hyper.hidden_size == 6);
    CHECK(r.lookback == 3);
    CHECK(r.hyper.epochs == 40);
    CHECK(r.hyper.lr == doctest::Approx(0.01));
    const auto [train, valid] = data::chronological_split(ds, 0.2);
    const auto w = neural::train_lstm(truncate_lookback(train, 3), r.hyper).weights;
    CHECK(r.validation_mse == neural::lstm_mse(w, truncate_lookback(valid, 3)));
  }
  SUBCASE("determinism and bounds") {
    HyperBox box{{2, 8}, {-2.5, -1.5}, {1, 4}, {10, 30}};
    const auto a = tune_lstm(ds, box, {5, 2, 3});
    const auto b = tune_lstm(ds, box, {5, 2, 3});
    CHECK(a.hyper.hidden_size == b.hyper.hidden_size);
    CHECK(a.hyper.lr == b.hyper.lr);
    CHECK(a.lookback == b.lookback);
    CHECK(a.validation_mse == b.validation_mse);
    CHECK(a.search.history.size() == 3);
    CHECK(a.search.evaluations == 15);
    CHECK((a.hyper.hidden_size >= 2 && a.hyper.hidden_size <= 8));
    CHECK((a.lookback >= 1 && a.lookback <= 4));
    CHECK((a.hyper.epochs >= 10 && a.hyper.epochs <= 30));
  }
  SUBCASE("tuned beats the untuned default on AR(1)") {
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto data = ar1_windows(6, 100 + seed);
      const auto [train, valid] = data::chronological_split(data, 0.2);
      neural::LstmHyper plain;
      plain.seed = seed;
      const double untuned = neural::lstm_mse(neural::train_lstm(train, plain).weights, valid);
      HyperBox box;
      box.lookback = {2, 6};
      const auto tuned = tune_lstm(data, box, {6, 4, seed});
      CHECK(std::isfinite(tuned.validation_mse));
      wins += tuned.validation_mse < untuned ? 1 : 0;
    }
    CHECK(wins >= 8);
  }
  SUBCASE("box wider than the data") {
    HyperBox box{{2, 8}, {-2.5, -1.5}, {1, 9}, {10, 30}};
    CHECK_THROWS_AS(tune_lstm(ds, box, {5, 2, 3}), Error);
  }
}
