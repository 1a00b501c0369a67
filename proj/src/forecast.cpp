#include "levyforge/forecast.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "levyforge/error.hpp"
#include "levyforge/rng.hpp"

namespace levyforge::forecast {

void validate(const HyperBox& box) {
  require(box.hidden.lo >= 1 && box.hidden.lo <= box.hidden.hi, ErrorKind::domain,
          "hidden_size range must be nonempty and positive");
  require(box.lookback.lo >= 1 && box.lookback.lo <= box.lookback.hi, ErrorKind::domain,
          "lookback range must be nonempty and positive");
  require(box.epochs.lo >= 1 && box.epochs.lo <= box.epochs.hi, ErrorKind::domain,
          "epochs range must be nonempty and positive");
  require(std::isfinite(box.log10_lr.lo) && box.log10_lr.lo <= box.log10_lr.hi, ErrorKind::domain,
          "learning-rate range must be nonempty");
}

data::WindowedDataset truncate_lookback(const data::WindowedDataset& dataset, std::size_t lookback) {
  require(lookback >= 1 && lookback <= dataset.lookback, ErrorKind::size,
          "cannot extend windows beyond the dataset lookback");
  data::WindowedDataset out;
  out.lookback = lookback;
  out.horizon = dataset.horizon;
  out.targets = dataset.targets;
  out.inputs.reserve(dataset.size());
  for (const auto& w : dataset.inputs) out.inputs.emplace_back(w.end() - static_cast<std::ptrdiff_t>(lookback), w.end());
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Dimension {
  double lo;
  double hi;
  bool integer;
};

std::size_t round_to(double x, std::size_t lo, std::size_t hi) {
  const auto r = static_cast<long long>(std::llround(x));
  return static_cast<std::size_t>(std::clamp<long long>(r, static_cast<long long>(lo), static_cast<long long>(hi)));
}

std::uint64_t candidate_seed(std::uint64_t seed, std::size_t hidden, std::size_t lookback,
                             std::size_t epochs, double log10_lr) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t v : {static_cast<std::uint64_t>(hidden), static_cast<std::uint64_t>(lookback),
                          static_cast<std::uint64_t>(epochs), std::bit_cast<std::uint64_t>(log10_lr)}) {
    h = splitmix64(h ^ v);
  }
  return h;
}

}  // namespace

TuneResult tune_lstm(const data::WindowedDataset& dataset, const HyperBox& box,
                     const optim::SearchConfig& gwo) {
  validate(box);
  require(dataset.size() >= 5, ErrorKind::size, "tuning needs at least 5 windows");
  require(box.lookback.hi <= dataset.lookback, ErrorKind::size,
          "lookback range exceeds the dataset window length");
  const auto [train, valid] = data::chronological_split(dataset, 0.2);

  // Full vector: hidden, log10 lr, lookback, epochs. Only non-degenerate
  // ranges are searched; the rest stay fixed at their single value.
  const std::array<Dimension, 4> dims{{
      {static_cast<double>(box.hidden.lo), static_cast<double>(box.hidden.hi), true},
      {box.log10_lr.lo, box.log10_lr.hi, false},
      {static_cast<double>(box.lookback.lo), static_cast<double>(box.lookback.hi), true},
      {static_cast<double>(box.epochs.lo), static_cast<double>(box.epochs.hi), true},
  }};
  std::vector<std::size_t> free;
  optim::Bounds bounds;
  for (std::size_t j = 0; j < dims.size(); ++j) {
    if (dims[j].hi > dims[j].lo) {
      free.push_back(j);
      // Widen integer ranges by half a unit so the end values get fair mass.
      const double pad = dims[j].integer ? 0.5 - 1e-9 : 0.0;
      bounds.lower.push_back(dims[j].lo - pad);
      bounds.upper.push_back(dims[j].hi + pad);
    }
  }

  auto decode = [&](std::span<const double> x) {
    std::array<double, 4> full{dims[0].lo, dims[1].lo, dims[2].lo, dims[3].lo};
    for (std::size_t q = 0; q < free.size(); ++q) full[free[q]] = x[q];
    TuneResult t;
    t.hyper.hidden_size = round_to(full[0], box.hidden.lo, box.hidden.hi);
    t.hyper.lr = std::pow(10.0, full[1]);
    t.lookback = round_to(full[2], box.lookback.lo, box.lookback.hi);
    t.hyper.epochs = round_to(full[3], box.epochs.lo, box.epochs.hi);
    t.hyper.seed = candidate_seed(gwo.seed, t.hyper.hidden_size, t.lookback, t.hyper.epochs, full[1]);
    return t;
  };
  auto evaluate = [&](const TuneResult& t) {
    try {
      const auto tr = truncate_lookback(train, t.lookback);
      const auto va = truncate_lookback(valid, t.lookback);
      const auto model = neural::train_lstm(tr, t.hyper);
      const double mse = neural::lstm_mse(model.weights, va);
      return std::isfinite(mse) ? mse : kInf;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::training) return kInf;
      throw;
    }
  };

  if (free.empty()) {
    TuneResult t = decode({});
    t.validation_mse = evaluate(t);
    require(std::isfinite(t.validation_mse), ErrorKind::training,
            "tuning failed: the only candidate diverged");
    return t;
  }

  optim::SearchResult search;
  try {
    search = optim::gwo_minimize([&](std::span<const double> x) { return evaluate(decode(x)); },
                                 bounds, gwo);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::search) {
      throw Error(ErrorKind::training, "tuning failed: every candidate diverged");
    }
    throw;
  }
  TuneResult best = decode(search.best.position);
  best.validation_mse = search.best.fitness;
  best.search = std::move(search);
  return best;
}

data::WindowedDataset scaled_windows(std::span<const double> prices, const data::StandardScaler& in,
                                     const data::MinMaxScaler& out, std::size_t lookback) {
  const auto x = in.transform(prices);
  const auto y = out.transform(prices);
  return data::make_windows(x, y, lookback, 1);
}

LstmForecaster fit_forecaster(std::span<const double> prices, std::size_t lookback,
                              const neural::LstmHyper& hyper) {
  LstmForecaster f{neural::LstmWeights::zeros(1, std::max<std::size_t>(hyper.hidden_size, 1)),
                   data::fit_standard(prices), data::fit_minmax(prices), lookback, {}};
  const auto ds = scaled_windows(prices, f.input_scaler, f.target_scaler, lookback);
  auto trained = neural::train_lstm(ds, hyper);
  f.weights = std::move(trained.weights);
  f.loss_trace = std::move(trained.loss_trace);
  return f;
}

std::vector<double> rolling_lstm_forecast(const LstmForecaster& model, std::span<const double> series,
                                          std::size_t horizon) {
  if (horizon == 0) return {};
  require(model.lookback >= 1, ErrorKind::contract, "forecaster has no lookback");
  require(series.size() >= horizon + model.lookback, ErrorKind::size,
          "series too short: " + std::to_string(horizon) + " forecasts with lookback " +
              std::to_string(model.lookback) + " need " + std::to_string(horizon + model.lookback) +
              " prices");
  std::vector<double> out;
  out.reserve(horizon);
  std::vector<double> window(model.lookback);
  const std::size_t first = series.size() - horizon;
  for (std::size_t t = first; t < series.size(); ++t) {
    for (std::size_t k = 0; k < model.lookback; ++k) {
      window[k] = model.input_scaler.transform(series[t - model.lookback + k]);
    }
    out.push_back(model.target_scaler.inverse(neural::lstm_predict(model.weights, window)));
  }
  return out;
}

std::vector<double> rolling_lstm_forecast(const LstmForecaster& model, const data::RawSeries& series,
                                          std::size_t horizon) {
  return rolling_lstm_forecast(model, std::span<const double>(series.prices), horizon);
}

double quantile(std::vector<double> sample, double q) {
  require(!sample.empty(), ErrorKind::size, "quantile of an empty sample");
  require(q >= 0.0 && q <= 1.0, ErrorKind::domain, "quantile level must lie in [0, 1]");
  const double pos = q * static_cast<double>(sample.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sample.size() - 1);
  std::nth_element(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(lo), sample.end());
  const double a = sample[lo];
  if (hi == lo) return a;
  const double b = *std::min_element(sample.begin() + static_cast<std::ptrdiff_t>(lo) + 1, sample.end());
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

ForecastResult hybrid_forecast(std::span<const double> lstm_point, const processes::MertonParams& merton,
                               std::span<const double> anchors, const HybridConfig& config) {
  processes::validate(merton);
  require(lstm_point.size() == anchors.size(), ErrorKind::shape,
          "lstm forecasts and anchors differ in length");
  require(config.weight >= 0.0 && config.weight <= 1.0, ErrorKind::domain,
          "ensemble weight must lie in [0, 1]");
  require(config.n_mc_paths >= 2, ErrorKind::domain, "need at least two Monte Carlo paths");
  require(config.lower_quantile >= 0.0 && config.lower_quantile <= config.upper_quantile &&
              config.upper_quantile <= 1.0,
          ErrorKind::domain, "quantile levels must satisfy 0 <= lower <= upper <= 1");
  require(config.dt > 0.0, ErrorKind::domain, "dt must be positive");

  ForecastResult res;
  res.horizon = anchors.size();
  res.ensemble_weight = config.weight;
  const double w = config.weight;
  for (std::size_t t = 0; t < anchors.size(); ++t) {
    require(anchors[t] > 0.0, ErrorKind::domain, "anchor prices must be positive");
    const processes::SimGrid grid{config.dt, 1, anchors[t]};
    const auto sample = processes::merton_terminals(merton, grid, config.n_mc_paths,
                                                    stream_seed(config.seed, t),
                                                    processes::MertonScheme::jump_adapted);
    const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) /
                        static_cast<double>(sample.size());
    const double point = w == 1.0 ? lstm_point[t] : w * lstm_point[t] + (1.0 - w) * mean;
    const double shift = point - mean;
    res.mc_mean.push_back(mean);
    res.point.push_back(point);
    res.lower.push_back(std::min(quantile(sample, config.lower_quantile) + shift, point));
    res.upper.push_back(std::max(quantile(sample, config.upper_quantile) + shift, point));
  }
  return res;
}

MetricsReport compute_metrics(std::span<const double> pred, std::span<const double> actual) {
  require(pred.size() == actual.size(), ErrorKind::shape, "predictions and actuals differ in length");
  require(!pred.empty(), ErrorKind::shape, "metrics of empty vectors");
  const auto n = static_cast<double>(pred.size());
  double abs_sum = 0.0, sq_sum = 0.0, rel_sum = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    require(actual[i] != 0.0, ErrorKind::domain,
            "MSPE undefined: actual value at index " + std::to_string(i) + " is zero");
    const double e = pred[i] - actual[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    rel_sum += (e / actual[i]) * (e / actual[i]);
    mean += actual[i];
  }
  mean /= n;
  double tot = 0.0;
  for (double a : actual) tot += (a - mean) * (a - mean);
  require(tot > 0.0, ErrorKind::domain, "R^2 undefined: actual values have zero variance");
  MetricsReport m;
  m.mae = abs_sum / n;
  m.mse = sq_sum / n;
  m.rmse = std::sqrt(m.mse);
  m.mspe = rel_sum / n;
  m.r2 = 1.0 - sq_sum / tot;
  return m;
}

}  // namespace levyforge::forecast
