#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "levyforge/data.hpp"
#include "levyforge/neural.hpp"
#include "levyforge/optimizers.hpp"
#include "levyforge/processes.hpp"

namespace levyforge::forecast {

struct IntRange {
  std::size_t lo = 1;
  std::size_t hi = 1;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Search box for LSTM hyperparameters. The learning rate is searched as
/// log10(lr). Integer dimensions are rounded when the objective is called.
struct HyperBox {
  IntRange hidden{4, 24};
  RealRange log10_lr{-2.7, -1.3};
  IntRange lookback{2, 10};
  IntRange epochs{60, 240};
};

void validate(const HyperBox& box);

struct TuneResult {
  neural::LstmHyper hyper;
  std::size_t lookback = 0;
  double validation_mse = 0.0;
  optim::SearchResult search;  // empty history when the box is a single point
};

/// GWO over the box. Windows of `dataset` are cut to their trailing
/// `lookback` entries, so box.lookback.hi must not exceed dataset.lookback.
/// The last 20% of windows form the validation set.
TuneResult tune_lstm(const data::WindowedDataset& dataset, const HyperBox& box,
                     const optim::SearchConfig& gwo);

/// Drops the leading entries of every window so it keeps `lookback` values.
data::WindowedDataset truncate_lookback(const data::WindowedDataset& dataset, std::size_t lookback);

/// A trained LSTM plus the scalers that map prices in and out of it: inputs
/// standardized, targets min-max scaled.
struct LstmForecaster {
  neural::LstmWeights weights;
  data::StandardScaler input_scaler;
  data::MinMaxScaler target_scaler;
  std::size_t lookback = 0;
  std::vector<double> loss_trace;
};

/// Fits scalers on `prices` and trains on every one-step window.
LstmForecaster fit_forecaster(std::span<const double> prices, std::size_t lookback,
                              const neural::LstmHyper& hyper);

/// Windowed dataset in the forecaster's scaled space (inputs standardized,
/// targets min-max scaled), horizon 1.
data::WindowedDataset scaled_windows(std::span<const double> prices, const data::StandardScaler& in,
                                     const data::MinMaxScaler& out, std::size_t lookback);

/// One-step forecasts of the last `horizon` prices of `series`. The forecast
/// for index t only reads prices before t.
std::vector<double> rolling_lstm_forecast(const LstmForecaster& model, std::span<const double> series,
                                          std::size_t horizon);
std::vector<double> rolling_lstm_forecast(const LstmForecaster& model, const data::RawSeries& series,
                                          std::size_t horizon);

struct HybridConfig {
  double weight = 0.5;  // on the LSTM point
  std::size_t n_mc_paths = 2000;
  double lower_quantile = 0.05;
  double upper_quantile = 0.95;
  std::uint64_t seed = 0;
  double dt = 1.0 / 252.0;
};

struct ForecastResult {
  std::vector<double> point;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> mc_mean;
  std::size_t horizon = 0;
  double ensemble_weight = 0.0;
};

/// For each step, simulates one-day Merton transitions from anchors[t],
/// mixes the MC mean with the LSTM point and re-centres the MC quantiles on
/// the mixed point.
ForecastResult hybrid_forecast(std::span<const double> lstm_point, const processes::MertonParams& merton,
                               std::span<const double> anchors, const HybridConfig& config);

/// Type-7 (linear interpolation) sample quantile.
double quantile(std::vector<double> sample, double q);

struct MetricsReport {
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  double mspe = 0.0;
  double r2 = 0.0;
};

MetricsReport compute_metrics(std::span<const double> pred, std::span<const double> actual);

}  // namespace levyforge::forecast
