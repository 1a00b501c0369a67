#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "levyforge/calibrate.hpp"
#include "levyforge/data.hpp"
#include "levyforge/forecast.hpp"
#include "levyforge/neural.hpp"
#include "levyforge/processes.hpp"

namespace levyforge::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kNetworkFormat = "levyforge-nn-1";

/// Shortest text that reads back to the same double.
std::string format_double(double x);

Json to_json(const data::StandardScaler& s);
Json to_json(const data::MinMaxScaler& s);
data::StandardScaler standard_scaler_from_json(const Json& j);
data::MinMaxScaler minmax_scaler_from_json(const Json& j);

Json to_json(const neural::DenseNet& net);
neural::DenseNet dense_from_json(const Json& j);
Json to_json(const neural::LstmWeights& w);
neural::LstmWeights lstm_from_json(const Json& j);

Json to_json(const processes::MertonParams& p);
Json to_json(const processes::HestonParams& p);
processes::MertonParams merton_from_json(const Json& j);
processes::HestonParams heston_from_json(const Json& j);

/// {model, method, seed, runtime_seconds, epsilon, loss, params:{...}}
Json to_json(const calibrate::CalibrationResult& r);
calibrate::CalibrationResult calibration_from_json(const Json& j);

/// Keys mae, mse, rmse, mspe, r2.
Json to_json(const forecast::MetricsReport& m);

/// `t,path_0,...,path_{n-1}`, one row per grid point.
std::string pathset_csv(const processes::PathSet& paths);
/// {grid:{t_end, n_steps, s0}, paths:[[...], ...]}
Json to_json(const processes::PathSet& paths);

/// `step,point,lower,upper[,actual]`.
std::string forecast_csv(const forecast::ForecastResult& f,
                         std::optional<std::span<const double>> actual = std::nullopt);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace levyforge::io
