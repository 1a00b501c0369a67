#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace levyforge::data {

/// Ordered daily price observations.
struct RawSeries {
  std::vector<std::chrono::sys_days> timestamps;
  std::vector<double> prices;

  std::size_t size() const noexcept { return prices.size(); }
};

/// Validates the RawSeries invariants (length >= 2, strictly increasing
/// dates, positive prices). Throws levyforge::Error.
void validate(const RawSeries& series);

/// Builds a series from bare prices on a consecutive-day calendar.
RawSeries from_prices(std::span<const double> prices,
                      std::chrono::sys_days first = std::chrono::sys_days{std::chrono::year{2000} /
                                                                          1 / 1});

struct CsvColumns {
  std::string date = "date";
  std::string price = "price";
};

/// Reads a `date,price` CSV. Dates are ISO-8601 (YYYY-MM-DD, optional
/// `T...` suffix ignored). Rows must already be sorted.
RawSeries load_csv(const std::filesystem::path& path, const CsvColumns& columns = {});
RawSeries parse_csv(const std::string& text, const CsvColumns& columns = {});

std::chrono::sys_days parse_iso_date(const std::string& text);
std::string format_iso_date(std::chrono::sys_days day);

/// z = (x - mean) / std, population standard deviation.
struct StandardScaler {
  double mean = 0.0;
  double std = 1.0;

  double transform(double x) const noexcept { return (x - mean) / std; }
  double inverse(double z) const noexcept { return z * std + mean; }
  std::vector<double> transform(std::span<const double> xs) const;
  std::vector<double> inverse(std::span<const double> zs) const;
};

/// z = (x - min) / (max - min). Values outside the fitted range map outside
/// [0, 1]; nothing is clamped.
struct MinMaxScaler {
  double min = 0.0;
  double max = 1.0;

  double transform(double x) const noexcept { return (x - min) / (max - min); }
  double inverse(double z) const noexcept { return z * (max - min) + min; }
  std::vector<double> transform(std::span<const double> xs) const;
  std::vector<double> inverse(std::span<const double> zs) const;
};

StandardScaler fit_standard(std::span<const double> values);
StandardScaler fit_standard(const RawSeries& series);
MinMaxScaler fit_minmax(std::span<const double> values);
MinMaxScaler fit_minmax(const RawSeries& series);

/// Supervised (window -> continuation) pairs, ordered by window start.
struct WindowedDataset {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> targets;
  std::size_t lookback = 0;
  std::size_t horizon = 0;

  std::size_t size() const noexcept { return inputs.size(); }
  bool empty() const noexcept { return inputs.empty(); }
};

WindowedDataset make_windows(std::span<const double> series, std::size_t lookback,
                             std::size_t horizon);

/// Inputs sliced from `input_series`, targets from `target_series` at the
/// same positions. Used when inputs and targets live on different scales.
WindowedDataset make_windows(std::span<const double> input_series,
                             std::span<const double> target_series, std::size_t lookback,
                             std::size_t horizon);

/// Splits off the trailing fraction of windows, preserving order.
std::pair<WindowedDataset, WindowedDataset> chronological_split(const WindowedDataset& dataset,
                                                                double validation_fraction);

/// Appends `extra` to `base`; window shapes must agree.
void append(WindowedDataset& base, const WindowedDataset& extra);

/// Truncated fractional-difference weights w_0..w_truncation.
std::vector<double> frac_diff_weights(double d, std::size_t truncation);

/// out[j] = sum_k w_k x[j + truncation - k]; length len - truncation.
std::vector<double> frac_diff(std::span<const double> series, double d, std::size_t truncation);

}  // namespace levyforge::data
