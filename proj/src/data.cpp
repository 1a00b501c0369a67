#include "levyforge/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "levyforge/error.hpp"

namespace levyforge::data {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      current.push_back(c);
    } else if (c == ',' && !quoted) {
      fields.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(trim(current));
  return fields;
}

void check_scalable(std::span<const double> values) {
  require(values.size() >= 2, ErrorKind::size, "scaler needs at least 2 values");
  for (double v : values) require(std::isfinite(v), ErrorKind::domain, "scaler input is not finite");
}

}  // namespace

void validate(const RawSeries& series) {
  require(series.timestamps.size() == series.prices.size(), ErrorKind::shape,
          "timestamps and prices differ in length");
  require(series.size() >= 2, ErrorKind::size, "series needs at least 2 observations");
  for (std::size_t i = 0; i < series.size(); ++i) {
    require(std::isfinite(series.prices[i]) && series.prices[i] > 0.0, ErrorKind::domain,
            "price at index " + std::to_string(i) + " is not positive");
    if (i > 0)
      require(series.timestamps[i] > series.timestamps[i - 1], ErrorKind::ordering,
              "timestamp at index " + std::to_string(i) + " does not increase");
  }
}

RawSeries from_prices(std::span<const double> prices, std::chrono::sys_days first) {
  RawSeries series;
  series.prices.assign(prices.begin(), prices.end());
  series.timestamps.reserve(prices.size());
  for (std::size_t i = 0; i < prices.size(); ++i)
    series.timestamps.push_back(first + std::chrono::days{static_cast<int>(i)});
  validate(series);
  return series;
}

std::chrono::sys_days parse_iso_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  char dash1 = 0, dash2 = 0;
  std::istringstream in(text.substr(0, text.find('T')));
  in >> y >> dash1 >> m >> dash2 >> d;
  if (!in || dash1 != '-' || dash2 != '-' || !(in >> std::ws).eof())
    throw Error(ErrorKind::parse, "'" + text + "' is not an ISO-8601 date");
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw Error(ErrorKind::parse, "'" + text + "' is not a calendar date");
  return std::chrono::sys_days{ymd};
}

std::string format_iso_date(std::chrono::sys_days day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

RawSeries parse_csv(const std::string& text, const CsvColumns& columns) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t date_idx = 0, price_idx = 0;
  bool have_header = false;
  RawSeries series;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (!have_header) {
      auto find = [&](const std::string& name) {
        auto it = std::find(fields.begin(), fields.end(), name);
        if (it == fields.end())
          throw Error(ErrorKind::parse, "header has no column named '" + name + "'");
        return static_cast<std::size_t>(it - fields.begin());
      };
      date_idx = find(columns.date);
      price_idx = find(columns.price);
      have_header = true;
      continue;
    }
    const std::string row = "row " + std::to_string(line_no);
    if (fields.size() <= std::max(date_idx, price_idx))
      throw Error(ErrorKind::parse, row + ": too few fields");
    const std::string& cell = fields[price_idx];
    if (cell.empty()) throw Error(ErrorKind::parse, row + ": empty price cell");

    double price = 0.0;
    std::size_t consumed = 0;
    try {
      price = std::stod(cell, &consumed);
    } catch (const std::exception&) {
      consumed = 0;
    }
    if (consumed != cell.size() || !std::isfinite(price))
      throw Error(ErrorKind::parse, row + ": price '" + cell + "' is not a number");
    require(price > 0.0, ErrorKind::domain, row + ": price must be positive");

    std::chrono::sys_days day;
    try {
      day = parse_iso_date(fields[date_idx]);
    } catch (const Error& e) {
      throw Error(ErrorKind::parse, row + ": " + e.detail());
    }
    if (!series.timestamps.empty() && day <= series.timestamps.back())
      throw Error(ErrorKind::ordering, row + ": date " + fields[date_idx] +
                                           " does not follow the previous row");
    series.timestamps.push_back(day);
    series.prices.push_back(price);
  }
  require(have_header, ErrorKind::parse, "missing header row");
  require(series.size() >= 2, ErrorKind::size, "series needs at least 2 rows");
  return series;
}

RawSeries load_csv(const std::filesystem::path& path, const CsvColumns& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_csv(buffer.str(), columns);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

std::vector<double> StandardScaler::transform(std::span<const double> xs) const {
  std::vector<double> out(xs.size());
  std::transform(xs.begin(), xs.end(), out.begin(), [this](double x) { return transform(x); });
  return out;
}

std::vector<double> StandardScaler::inverse(std::span<const double> zs) const {
  std::vector<double> out(zs.size());
  std::transform(zs.begin(), zs.end(), out.begin(), [this](double z) { return inverse(z); });
  return out;
}

std::vector<double> MinMaxScaler::transform(std::span<const double> xs) const {
  std::vector<double> out(xs.size());
  std::transform(xs.begin(), xs.end(), out.begin(), [this](double x) { return transform(x); });
  return out;
}

std::vector<double> MinMaxScaler::inverse(std::span<const double> zs) const {
  std::vector<double> out(zs.size());
  std::transform(zs.begin(), zs.end(), out.begin(), [this](double z) { return inverse(z); });
  return out;
}

StandardScaler fit_standard(std::span<const double> values) {
  check_scalable(values);
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  require(sd > 0.0, ErrorKind::domain, "degenerate scale: series is constant");
  return {mean, sd};
}

StandardScaler fit_standard(const RawSeries& series) { return fit_standard(series.prices); }

MinMaxScaler fit_minmax(std::span<const double> values) {
  check_scalable(values);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  require(*hi > *lo, ErrorKind::domain, "degenerate scale: series is constant");
  return {*lo, *hi};
}

MinMaxScaler fit_minmax(const RawSeries& series) { return fit_minmax(series.prices); }

WindowedDataset make_windows(std::span<const double> series, std::size_t lookback,
                             std::size_t horizon) {
  return make_windows(series, series, lookback, horizon);
}

WindowedDataset make_windows(std::span<const double> input_series,
                             std::span<const double> target_series, std::size_t lookback,
                             std::size_t horizon) {
  require(lookback > 0 && horizon > 0, ErrorKind::domain, "lookback and horizon must be positive");
  require(input_series.size() == target_series.size(), ErrorKind::shape,
          "input and target series differ in length");
  const std::size_t n = input_series.size();
  require(n >= lookback + horizon, ErrorKind::size,
          "series of length " + std::to_string(n) + " is shorter than lookback + horizon = " +
              std::to_string(lookback + horizon));
  WindowedDataset ds;
  ds.lookback = lookback;
  ds.horizon = horizon;
  const std::size_t count = n - lookback - horizon + 1;
  ds.inputs.reserve(count);
  ds.targets.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    ds.inputs.emplace_back(input_series.begin() + s, input_series.begin() + s + lookback);
    ds.targets.emplace_back(target_series.begin() + s + lookback,
                            target_series.begin() + s + lookback + horizon);
  }
  return ds;
}

std::pair<WindowedDataset, WindowedDataset> chronological_split(const WindowedDataset& dataset,
                                                                double validation_fraction) {
  require(validation_fraction > 0.0 && validation_fraction < 1.0, ErrorKind::domain,
          "validation fraction must lie in (0, 1)");
  const std::size_t n = dataset.size();
  const auto n_val = static_cast<std::size_t>(std::ceil(validation_fraction * static_cast<double>(n)));
  require(n_val >= 1 && n_val < n, ErrorKind::size, "dataset too small to split");
  WindowedDataset train, val;
  train.lookback = val.lookback = dataset.lookback;
  train.horizon = val.horizon = dataset.horizon;
  const std::size_t cut = n - n_val;
  train.inputs.assign(dataset.inputs.begin(), dataset.inputs.begin() + cut);
  train.targets.assign(dataset.targets.begin(), dataset.targets.begin() + cut);
  val.inputs.assign(dataset.inputs.begin() + cut, dataset.inputs.end());
  val.targets.assign(dataset.targets.begin() + cut, dataset.targets.end());
  return {std::move(train), std::move(val)};
}

void append(WindowedDataset& base, const WindowedDataset& extra) {
  if (base.empty() && base.lookback == 0) {
    base = extra;
    return;
  }
  require(base.lookback == extra.lookback && base.horizon == extra.horizon, ErrorKind::shape,
          "window shapes differ");
  base.inputs.insert(base.inputs.end(), extra.inputs.begin(), extra.inputs.end());
  base.targets.insert(base.targets.end(), extra.targets.begin(), extra.targets.end());
}

std::vector<double> frac_diff_weights(double d, std::size_t truncation) {
  require(d >= 0.0 && d <= 1.0, ErrorKind::domain, "fractional order d must lie in [0, 1]");
  require(truncation >= 1, ErrorKind::domain, "truncation must be at least 1");
  std::vector<double> w(truncation + 1);
  w[0] = 1.0;
  for (std::size_t k = 1; k <= truncation; ++k) {
    const double kd = static_cast<double>(k);
    w[k] = -w[k - 1] * (d - kd + 1.0) / kd;
  }
  return w;
}

std::vector<double> frac_diff(std::span<const double> series, double d, std::size_t truncation) {
  const auto w = frac_diff_weights(d, truncation);
  require(series.size() > truncation, ErrorKind::size, "series must be longer than the truncation");
  std::vector<double> out(series.size() - truncation);
  for (std::size_t j = 0; j < out.size(); ++j) {
    const std::size_t t = j + truncation;
    double acc = 0.0;
    for (std::size_t k = 0; k <= truncation; ++k) acc += w[k] * series[t - k];
    out[j] = acc;
  }
  return out;
}

}  // namespace levyforge::data
