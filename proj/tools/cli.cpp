#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "levyforge/calibrate.hpp"
#include "levyforge/data.hpp"
#include "levyforge/error.hpp"
#include "levyforge/forecast.hpp"
#include "levyforge/heston.hpp"
#include "levyforge/processes.hpp"
#include "levyforge/rng.hpp"
#include "levyforge/serialize.hpp"

namespace levyforge::cli {
namespace {

namespace fs = std::filesystem;
using io::Json;

inline constexpr int kConfigVersion = 1;

// Bad flags or config content. Always exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse:
    case ErrorKind::ordering:
    case ErrorKind::size:
    case ErrorKind::shape:
    case ErrorKind::io:
      return kData;
    case ErrorKind::unsupported:
      return kUsage;
    default:
      return kNumeric;
  }
}

// A library error with the stage it came from prepended.
struct ContextError : std::runtime_error {
  ContextError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
  int code;
};

template <class F>
auto in_context(const std::string& context, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ContextError& e) {
    throw ContextError(e.code, context + ": " + e.what());
  } catch (const Error& e) {
    throw ContextError(exit_code(e.kind()), context + ": " + e.what());
  }
}

struct SimulateSettings {
  double s0 = 100.0;
  double t_end = 5.0;
  std::size_t n_steps = 1000;
  std::size_t n_paths = 10;
  processes::MertonScheme scheme = processes::MertonScheme::jump_adapted;
};

struct TuneSettings {
  forecast::HyperBox box{{4, 16}, {-2.5, -1.3}, {2, 8}, {40, 120}};
  optim::SearchConfig gwo{6, 4, 0};
};

struct ForecastSettings {
  double test_fraction = 0.2;
  forecast::HybridConfig hybrid;
};

struct SyntheticSettings {
  std::size_t n_points = 500;
  double s0 = 100.0;
};

struct RunConfig {
  std::uint64_t seed = 0;
  fs::path out = "runs";
  std::optional<fs::path> data;
  data::CsvColumns columns;
  calibrate::ModelKind model = calibrate::ModelKind::merton;
  calibrate::Method method = calibrate::Method::nn;
  processes::MertonParams merton{0.05, 0.2, 10.0, 0.0, std::sqrt(0.22)};
  processes::HestonParams heston;
  SimulateSettings simulate;
  calibrate::NetConfig net;
  optim::SearchConfig mpa{30, 100, 0};
  calibrate::RegularizationConfig regularization;
  TuneSettings tune;
  ForecastSettings forecast;
  SyntheticSettings synthetic;
};

// ---- config file ---------------------------------------------------------

void only_keys(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw UsageError("config section '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    const bool known =
        std::any_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; });
    if (!known) throw UsageError("unknown config key '" + where + "." + key + "'");
  }
}

template <class T>
void read(const Json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

void read_merton(const Json& j, processes::MertonParams& p) {
  only_keys(j, {"mu", "sigma", "lambda", "m", "delta"}, "merton");
  read(j, "mu", p.mu);
  read(j, "sigma", p.sigma);
  read(j, "lambda", p.lambda);
  read(j, "m", p.m);
  read(j, "delta", p.delta);
}

void read_heston(const Json& j, processes::HestonParams& p) {
  only_keys(j, {"mu", "kappa", "theta", "xi", "rho", "v0", "hurst", "beta"}, "heston");
  read(j, "mu", p.mu);
  read(j, "kappa", p.kappa);
  read(j, "theta", p.theta);
  read(j, "xi", p.xi);
  read(j, "rho", p.rho);
  read(j, "v0", p.v0);
  read(j, "hurst", p.hurst);
  read(j, "beta", p.beta);
}

processes::MertonScheme parse_scheme(const std::string& s) {
  if (s == "jump_adapted") return processes::MertonScheme::jump_adapted;
  if (s == "log_euler") return processes::MertonScheme::log_euler;
  throw UsageError("unknown scheme '" + s + "', expected jump_adapted or log_euler");
}

std::string to_string(processes::MertonScheme s) {
  return s == processes::MertonScheme::jump_adapted ? "jump_adapted" : "log_euler";
}

calibrate::LogNormalPrior read_prior(const Json& j, const std::string& where) {
  only_keys(j, {"mu", "sigma"}, where);
  calibrate::LogNormalPrior p;
  read(j, "mu", p.mu);
  read(j, "sigma", p.sigma);
  return p;
}

void read_search(const Json& j, optim::SearchConfig& s, const std::string& where) {
  only_keys(j, {"population", "iterations", "fads_prob", "mixing_p"}, where);
  read(j, "population", s.population);
  read(j, "iterations", s.iterations);
  read(j, "fads_prob", s.fads_prob);
  read(j, "mixing_p", s.mixing_p);
}

void read_int_range(const Json& j, forecast::IntRange& r, const char* key) {
  if (!j.contains(key)) return;
  const auto v = j.at(key).get<std::vector<std::size_t>>();
  if (v.size() != 2) throw UsageError(std::string("tune.box.") + key + " must be [lo, hi]");
  r = {v[0], v[1]};
}

void read_config_file(const fs::path& path, RunConfig& cfg) {
  Json j;
  try {
    j = Json::parse(io::read_text(path));
  } catch (const Json::exception& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  only_keys(j, {"version", "seed", "out", "data", "model", "method", "merton", "heston", "simulate",
                "calibrate", "tune", "forecast", "synthetic"},
            "config");
  if (!j.contains("version") || j.at("version") != kConfigVersion)
    throw UsageError("config " + path.string() + ": expected \"version\": " +
                     std::to_string(kConfigVersion));
  read(j, "seed", cfg.seed);
  if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
  if (j.contains("data")) {
    const Json& d = j.at("data");
    only_keys(d, {"path", "date_col", "price_col"}, "data");
    if (d.contains("path")) {
      // Relative data paths are taken from the config file's directory.
      fs::path p = d.at("path").get<std::string>();
      cfg.data = p.is_absolute() ? p : path.parent_path() / p;
    }
    read(d, "date_col", cfg.columns.date);
    read(d, "price_col", cfg.columns.price);
  }
  if (j.contains("model")) cfg.model = calibrate::parse_model_kind(j.at("model").get<std::string>());
  if (j.contains("method")) cfg.method = calibrate::parse_method(j.at("method").get<std::string>());
  if (j.contains("merton")) read_merton(j.at("merton"), cfg.merton);
  if (j.contains("heston")) read_heston(j.at("heston"), cfg.heston);
  if (j.contains("simulate")) {
    const Json& s = j.at("simulate");
    only_keys(s, {"s0", "t_end", "n_steps", "n_paths", "scheme"}, "simulate");
    read(s, "s0", cfg.simulate.s0);
    read(s, "t_end", cfg.simulate.t_end);
    read(s, "n_steps", cfg.simulate.n_steps);
    read(s, "n_paths", cfg.simulate.n_paths);
    if (s.contains("scheme")) cfg.simulate.scheme = parse_scheme(s.at("scheme").get<std::string>());
  }
  if (j.contains("calibrate")) {
    const Json& c = j.at("calibrate");
    only_keys(c, {"net", "mpa", "regularization"}, "calibrate");
    if (c.contains("net")) {
      const Json& n = c.at("net");
      only_keys(n, {"input_size", "hidden", "epochs", "lr", "heston_epochs", "fd_step"},
                "calibrate.net");
      read(n, "input_size", cfg.net.input_size);
      read(n, "hidden", cfg.net.hidden);
      read(n, "epochs", cfg.net.epochs);
      read(n, "lr", cfg.net.lr);
      read(n, "heston_epochs", cfg.net.heston_epochs);
      read(n, "fd_step", cfg.net.fd_step);
    }
    if (c.contains("mpa")) read_search(c.at("mpa"), cfg.mpa, "calibrate.mpa");
    if (c.contains("regularization")) {
      const Json& r = c.at("regularization");
      only_keys(r, {"lambda_reg", "lambda_prior", "k_prior"}, "calibrate.regularization");
      read(r, "lambda_reg", cfg.regularization.lambda_reg);
      if (r.contains("lambda_prior"))
        cfg.regularization.lambda_prior = read_prior(r.at("lambda_prior"), "lambda_prior");
      if (r.contains("k_prior")) cfg.regularization.k_prior = read_prior(r.at("k_prior"), "k_prior");
    }
  }
  if (j.contains("tune")) {
    const Json& t = j.at("tune");
    only_keys(t, {"box", "gwo"}, "tune");
    if (t.contains("box")) {
      const Json& b = t.at("box");
      only_keys(b, {"hidden", "log10_lr", "lookback", "epochs"}, "tune.box");
      read_int_range(b, cfg.tune.box.hidden, "hidden");
      read_int_range(b, cfg.tune.box.lookback, "lookback");
      read_int_range(b, cfg.tune.box.epochs, "epochs");
      if (b.contains("log10_lr")) {
        const auto v = b.at("log10_lr").get<std::vector<double>>();
        if (v.size() != 2) throw UsageError("tune.box.log10_lr must be [lo, hi]");
        cfg.tune.box.log10_lr = {v[0], v[1]};
      }
    }
    if (t.contains("gwo")) read_search(t.at("gwo"), cfg.tune.gwo, "tune.gwo");
  }
  if (j.contains("forecast")) {
    const Json& f = j.at("forecast");
    only_keys(f, {"test_fraction", "weight", "n_mc_paths", "lower_quantile", "upper_quantile"},
              "forecast");
    read(f, "test_fraction", cfg.forecast.test_fraction);
    read(f, "weight", cfg.forecast.hybrid.weight);
    read(f, "n_mc_paths", cfg.forecast.hybrid.n_mc_paths);
    read(f, "lower_quantile", cfg.forecast.hybrid.lower_quantile);
    read(f, "upper_quantile", cfg.forecast.hybrid.upper_quantile);
  }
  if (j.contains("synthetic")) {
    const Json& s = j.at("synthetic");
    only_keys(s, {"n_points", "s0"}, "synthetic");
    read(s, "n_points", cfg.synthetic.n_points);
    read(s, "s0", cfg.synthetic.s0);
  }
}

void validate(const RunConfig& cfg) {
  processes::validate(cfg.merton);
  processes::validate(cfg.heston);
  processes::validate(processes::SimGrid{cfg.simulate.t_end, cfg.simulate.n_steps, cfg.simulate.s0});
  if (cfg.simulate.n_paths == 0) throw UsageError("simulate.n_paths must be positive");
  if (cfg.net.input_size < 2 || cfg.net.epochs == 0 || !(cfg.net.lr > 0.0))
    throw UsageError("calibrate.net needs input_size >= 2, epochs > 0 and lr > 0");
  optim::validate(cfg.mpa);
  calibrate::validate(cfg.regularization);
  forecast::validate(cfg.tune.box);
  optim::validate(cfg.tune.gwo);
  const auto& f = cfg.forecast;
  if (!(f.test_fraction > 0.0 && f.test_fraction < 1.0))
    throw UsageError("forecast.test_fraction must lie in (0, 1)");
  if (!(f.hybrid.weight >= 0.0 && f.hybrid.weight <= 1.0))
    throw UsageError("--weight must lie in [0, 1]");
  if (f.hybrid.n_mc_paths < 2) throw UsageError("forecast.n_mc_paths must be at least 2");
  if (!(f.hybrid.lower_quantile >= 0.0 && f.hybrid.lower_quantile < f.hybrid.upper_quantile &&
        f.hybrid.upper_quantile <= 1.0))
    throw UsageError("forecast quantiles must satisfy 0 <= lower < upper <= 1");
  if (cfg.synthetic.n_points < 50) throw UsageError("synthetic.n_points must be at least 50");
  if (!(cfg.synthetic.s0 > 0.0)) throw UsageError("synthetic.s0 must be positive");
}

Json manifest_json(const RunConfig& cfg, const std::string& command) {
  Json j;
  j["version"] = kConfigVersion;
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["model"] = calibrate::to_string(cfg.model);
  j["method"] = calibrate::to_string(cfg.method);
  if (cfg.data) {
    j["data"] = {{"path", cfg.data->string()},
                 {"date_col", cfg.columns.date},
                 {"price_col", cfg.columns.price}};
  }
  j["merton"] = io::to_json(cfg.merton);
  j["heston"] = io::to_json(cfg.heston);
  return j;
}

// ---- run directory -------------------------------------------------------

fs::path make_run_dir(const RunConfig& cfg) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  const std::string base = std::string(stamp) + "-s" + std::to_string(cfg.seed);
  fs::path dir = cfg.out / base;
  for (int k = 2; fs::exists(dir); ++k) dir = cfg.out / (base + "-" + std::to_string(k));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ContextError(kData, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

class Run {
 public:
  Run(const RunConfig& cfg, std::ostream& out) : dir_(make_run_dir(cfg)), out_(out) {
    out_ << "run directory: " << dir_.string() << '\n';
  }

  void write(const std::string& name, const std::string& text) {
    io::write_text(dir_ / name, text);
    out_ << "wrote " << (dir_ / name).string() << '\n';
  }
  void write(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

 private:
  fs::path dir_;
  std::ostream& out_;
};

// ---- commands ------------------------------------------------------------

data::RawSeries load_series(const RunConfig& cfg) {
  if (!cfg.data) throw UsageError("--data is required");
  try {
    return data::load_csv(*cfg.data, cfg.columns);
  } catch (const Error& e) {
    // Whatever is wrong with an input file is a data problem.
    throw ContextError(kData, e.what());
  }
}

data::RawSeries head(const data::RawSeries& s, std::size_t n) {
  data::RawSeries out;
  out.timestamps.assign(s.timestamps.begin(), s.timestamps.begin() + static_cast<std::ptrdiff_t>(n));
  out.prices.assign(s.prices.begin(), s.prices.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

calibrate::CalibrationResult do_calibrate(const RunConfig& cfg, const data::RawSeries& series,
                                          std::uint64_t seed) {
  if (cfg.method == calibrate::Method::nn)
    return calibrate::nn_calibrate(series, cfg.model, cfg.net, cfg.regularization, seed);
  return calibrate::mpa_calibrate(series, cfg.model, cfg.mpa, cfg.regularization, seed);
}

std::string trace_csv(std::span<const double> trace) {
  std::string s = "iteration,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    s += std::to_string(i) + ',' + io::format_double(trace[i]) + '\n';
  return s;
}

Json tune_json(const forecast::TuneResult& t) {
  Json j;
  j["hidden_size"] = t.hyper.hidden_size;
  j["lr"] = t.hyper.lr;
  j["lookback"] = t.lookback;
  j["epochs"] = t.hyper.epochs;
  j["seed"] = t.hyper.seed;
  j["validation_mse"] = t.validation_mse;
  j["evaluations"] = t.search.evaluations;
  return j;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const processes::SimGrid grid{cfg.simulate.t_end, cfg.simulate.n_steps, cfg.simulate.s0};
  Json manifest = manifest_json(cfg, "simulate");
  manifest["grid"] = {{"t_end", grid.t_end}, {"n_steps", grid.n_steps}, {"s0", grid.s0}};
  manifest["n_paths"] = cfg.simulate.n_paths;
  Run run(cfg, out);
  if (cfg.model == calibrate::ModelKind::merton) {
    const auto paths = in_context("stage simulate", [&] {
      return processes::simulate_merton(cfg.merton, grid, cfg.simulate.n_paths, cfg.seed,
                                        cfg.simulate.scheme);
    });
    manifest["scheme"] = to_string(cfg.simulate.scheme);
    manifest.erase("heston");
    run.write("paths.csv", io::pathset_csv(paths));
  } else {
    const auto paths = in_context("stage simulate", [&] {
      return processes::simulate_fractional_heston(cfg.heston, grid, cfg.simulate.n_paths, cfg.seed);
    });
    manifest["scheme"] = "full_truncation_log_euler";
    manifest.erase("merton");
    run.write("paths.csv", io::pathset_csv(paths.prices));
    run.write("variances.csv", io::pathset_csv(paths.variances));
  }
  run.write("manifest.json", manifest);
  return kOk;
}

int cmd_calibrate(const RunConfig& cfg, std::ostream& out) {
  const auto series = load_series(cfg);
  const auto result = in_context("stage calibrate", [&] { return do_calibrate(cfg, series, cfg.seed); });
  Run run(cfg, out);
  run.write("calibration.json", io::to_json(result));
  run.write("calibration_trace.csv", trace_csv(result.trace));
  return kOk;
}

struct StageOne {
  forecast::TuneResult tuned;
  forecast::LstmForecaster model;
};

StageOne stage_tune(const RunConfig& cfg, std::span<const double> train) {
  return in_context("stage tune", [&] {
    const auto in = data::fit_standard(train);
    const auto outs = data::fit_minmax(train);
    const auto windows = forecast::scaled_windows(train, in, outs, cfg.tune.box.lookback.hi);
    optim::SearchConfig gwo = cfg.tune.gwo;
    gwo.seed = stream_seed(cfg.seed, 1);
    auto tuned = forecast::tune_lstm(windows, cfg.tune.box, gwo);
    auto model = forecast::fit_forecaster(train, tuned.lookback, tuned.hyper);
    return StageOne{std::move(tuned), std::move(model)};
  });
}

std::size_t test_size(const RunConfig& cfg, std::size_t n) {
  const auto h = static_cast<std::size_t>(std::llround(cfg.forecast.test_fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(h, 1, n - 1);
}

int cmd_tune(const RunConfig& cfg, std::ostream& out) {
  const auto series = load_series(cfg);
  const std::size_t n_train = series.size() - test_size(cfg, series.size());
  const std::span<const double> train(series.prices.data(), n_train);
  const auto s = stage_tune(cfg, train);
  Run run(cfg, out);
  run.write("tune.json", tune_json(s.tuned));
  run.write("tune_history.csv", optim::fitness_history_csv(s.tuned.search.history));
  run.write("lstm.json", io::to_json(s.model.weights));
  return kOk;
}

struct Forecasts {
  StageOne stage1;
  calibrate::CalibrationResult calibration;
  forecast::ForecastResult lstm;
  forecast::ForecastResult hybrid;
  std::vector<double> actual;
};

Forecasts run_forecasts(const RunConfig& cfg, const data::RawSeries& series) {
  if (cfg.model != calibrate::ModelKind::merton)
    throw UsageError("hybrid forecasting needs --model merton");
  const std::size_t horizon = test_size(cfg, series.size());
  const std::size_t n_train = series.size() - horizon;
  const std::span<const double> prices(series.prices);
  auto stage1 = stage_tune(cfg, prices.first(n_train));
  const auto point = in_context("stage forecast", [&] {
    return forecast::rolling_lstm_forecast(stage1.model, prices, horizon);
  });
  auto calibration = in_context("stage calibrate", [&] {
    return do_calibrate(cfg, head(series, n_train), stream_seed(cfg.seed, 2));
  });
  const std::span<const double> anchors = prices.subspan(n_train - 1, horizon);
  auto h = cfg.forecast.hybrid;
  h.seed = stream_seed(cfg.seed, 3);
  auto hybrid = in_context("stage hybrid", [&] {
    return forecast::hybrid_forecast(point, calibration.merton, anchors, h);
  });
  h.weight = 1.0;
  auto lstm = in_context("stage hybrid", [&] {
    return forecast::hybrid_forecast(point, calibration.merton, anchors, h);
  });
  Forecasts f{std::move(stage1), std::move(calibration), std::move(lstm), std::move(hybrid),
              std::vector<double>(prices.begin() + static_cast<std::ptrdiff_t>(n_train), prices.end())};
  return f;
}

void write_forecasts(Run& run, const Forecasts& f) {
  run.write("tune.json", tune_json(f.stage1.tuned));
  run.write("tune_history.csv", optim::fitness_history_csv(f.stage1.tuned.search.history));
  run.write("lstm.json", io::to_json(f.stage1.model.weights));
  run.write("calibration.json", io::to_json(f.calibration));
  run.write("forecast_lstm.csv", io::forecast_csv(f.lstm, std::span<const double>(f.actual)));
  run.write("forecast_hybrid.csv", io::forecast_csv(f.hybrid, std::span<const double>(f.actual)));
}

int cmd_forecast(const RunConfig& cfg, std::ostream& out) {
  const auto series = load_series(cfg);
  const auto f = run_forecasts(cfg, series);
  Run run(cfg, out);
  write_forecasts(run, f);
  run.write("manifest.json", manifest_json(cfg, "forecast"));
  return kOk;
}

// Reads the `point` and `actual` columns of a forecast CSV.
std::pair<std::vector<double>, std::vector<double>> read_forecast_csv(const fs::path& path) {
  std::istringstream is(io::read_text(path));
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorKind::parse, "empty file");
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    for (std::string c; std::getline(ss, c, ',');) {
      if (!c.empty() && c.back() == '\r') c.pop_back();
      cells.push_back(c);
    }
    return cells;
  };
  const auto header = split(line);
  auto column = [&](const char* name) {
    const auto it = std::find(header.begin(), header.end(), name);
    require(it != header.end(), ErrorKind::parse, std::string("missing column '") + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ip = column("point");
  const std::size_t ia = column("actual");
  std::vector<double> point, actual;
  for (std::size_t row = 2; std::getline(is, line); ++row) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    auto number = [&](std::size_t i) {
      require(i < cells.size(), ErrorKind::parse, "row " + std::to_string(row) + ": too few fields");
      try {
        std::size_t used = 0;
        const double v = std::stod(cells[i], &used);
        require(used == cells[i].size() && std::isfinite(v), ErrorKind::parse, "");
        return v;
      } catch (const std::exception&) {
        throw Error(ErrorKind::parse, "row " + std::to_string(row) + ": bad number '" + cells[i] + "'");
      }
    };
    point.push_back(number(ip));
    actual.push_back(number(ia));
  }
  require(!point.empty(), ErrorKind::size, "no forecast rows");
  return {point, actual};
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.data) throw UsageError("--data is required (a forecast CSV with point and actual columns)");
  const auto [point, actual] = [&] {
    try {
      return read_forecast_csv(*cfg.data);
    } catch (const Error& e) {
      throw ContextError(kData, cfg.data->string() + ": " + e.detail());
    }
  }();
  const auto m = in_context("stage evaluate", [&] { return forecast::compute_metrics(point, actual); });
  Run run(cfg, out);
  run.write("metrics.json", io::to_json(m));
  return kOk;
}

data::RawSeries synthetic_series(const RunConfig& cfg) {
  const std::size_t n = cfg.synthetic.n_points;
  const processes::SimGrid grid{static_cast<double>(n - 1) * calibrate::kTradingDt, n - 1, cfg.synthetic.s0};
  const auto paths = processes::simulate_merton(cfg.merton, grid, 1, stream_seed(cfg.seed, 4),
                                                processes::MertonScheme::jump_adapted);
  return data::from_prices(paths.path(0));
}

std::string series_csv(const data::RawSeries& s) {
  std::string out = "date,price\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    out += data::format_iso_date(s.timestamps[i]) + ',' + io::format_double(s.prices[i]) + '\n';
  return out;
}

int cmd_pipeline(const RunConfig& cfg, std::ostream& out) {
  const bool synthetic = !cfg.data;
  const auto series = synthetic ? in_context("stage synthetic", [&] { return synthetic_series(cfg); })
                                : load_series(cfg);
  const auto f = run_forecasts(cfg, series);
  const auto lstm = in_context("stage evaluate", [&] { return forecast::compute_metrics(f.lstm.point, f.actual); });
  const auto hybrid =
      in_context("stage evaluate", [&] { return forecast::compute_metrics(f.hybrid.point, f.actual); });
  Run run(cfg, out);
  if (synthetic) run.write("series.csv", series_csv(series));
  write_forecasts(run, f);
  Json metrics;
  metrics["lstm"] = io::to_json(lstm);
  metrics["hybrid"] = io::to_json(hybrid);
  metrics["ensemble_weight"] = cfg.forecast.hybrid.weight;
  metrics["horizon"] = f.actual.size();
  run.write("metrics.json", metrics);
  Json manifest = manifest_json(cfg, "pipeline");
  manifest["synthetic"] = synthetic;
  run.write("manifest.json", manifest);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"levyforge: jump-diffusion simulation, calibration and hybrid LSTM forecasting"};
  app.name("levyforge");
  app.require_subcommand(1);

  struct Flags {
    std::string config, out, data, date_col, price_col, method, model;
    std::optional<std::uint64_t> seed;
    std::optional<double> weight;
  } flags;

  const std::vector<std::pair<const char*, const char*>> commands{
      {"simulate", "simulate Merton or fractional Heston paths"},
      {"calibrate", "calibrate a model to a price CSV"},
      {"tune", "GWO-tune and train the LSTM"},
      {"forecast", "tune, train, calibrate and write LSTM and hybrid forecasts"},
      {"evaluate", "metrics for a forecast CSV with an actual column"},
      {"pipeline", "forecast plus metrics; simulates a series when --data is absent"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "JSON run config");
    sub->add_option("--seed", flags.seed, "master seed");
    sub->add_option("--out", flags.out, "output root (a run directory is created inside)");
    sub->add_option("--data", flags.data, "input CSV");
    sub->add_option("--date-col", flags.date_col, "date column name");
    sub->add_option("--price-col", flags.price_col, "price column name");
    sub->add_option("--method", flags.method, "nn or mpa");
    sub->add_option("--model", flags.model, "merton or fheston");
    sub->add_option("--weight", flags.weight, "ensemble weight on the LSTM point, in [0, 1]");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "levyforge: " << e.what() << '\n' << "run 'levyforge --help' for usage\n";
    return kUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    if (!flags.config.empty()) read_config_file(flags.config, cfg);
    if (flags.seed) cfg.seed = *flags.seed;
    if (!flags.out.empty()) cfg.out = flags.out;
    if (!flags.data.empty()) cfg.data = flags.data;
    if (!flags.date_col.empty()) cfg.columns.date = flags.date_col;
    if (!flags.price_col.empty()) cfg.columns.price = flags.price_col;
    if (!flags.method.empty()) cfg.method = calibrate::parse_method(flags.method);
    if (!flags.model.empty()) cfg.model = calibrate::parse_model_kind(flags.model);
    if (flags.weight) cfg.forecast.hybrid.weight = *flags.weight;
    if ((command == "calibrate" || command == "tune" || command == "forecast" || command == "evaluate") &&
        !cfg.data)
      throw UsageError("--data is required for " + command);
    validate(cfg);
  } catch (const UsageError& e) {
    err << "levyforge " << command << ": " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "levyforge " << command << ": invalid configuration: " << e.what() << '\n';
    return kUsage;
  } catch (const Json::exception& e) {
    err << "levyforge " << command << ": invalid configuration: " << e.what() << '\n';
    return kUsage;
  }

  const std::map<std::string, std::function<int(const RunConfig&, std::ostream&)>> dispatch{
      {"simulate", cmd_simulate}, {"calibrate", cmd_calibrate}, {"tune", cmd_tune},
      {"forecast", cmd_forecast}, {"evaluate", cmd_evaluate},   {"pipeline", cmd_pipeline},
  };
  try {
    return dispatch.at(command)(cfg, out);
  } catch (const UsageError& e) {
    err << "levyforge " << command << ": " << e.what() << '\n';
    return kUsage;
  } catch (const ContextError& e) {
    err << "levyforge " << command << ": " << e.what() << '\n';
    return e.code;
  } catch (const Error& e) {
    err << "levyforge " << command << ": " << e.what() << '\n';
    return exit_code(e.kind());
  }
}

}  // namespace levyforge::cli
