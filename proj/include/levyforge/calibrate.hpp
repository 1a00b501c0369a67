#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "levyforge/data.hpp"
#include "levyforge/heston.hpp"
#include "levyforge/optimizers.hpp"
#include "levyforge/processes.hpp"

namespace levyforge::calibrate {

inline constexpr double kTradingDt = 1.0 / 252.0;

enum class ModelKind { merton, fractional_heston };
enum class Method { nn, mpa };

std::string_view to_string(ModelKind kind) noexcept;
std::string_view to_string(Method method) noexcept;
/// Accepts "merton", "fheston" and "fractional_heston".
ModelKind parse_model_kind(std::string_view text);
/// Accepts "nn" and "mpa"; "torchsde" is rejected as out of scope.
Method parse_method(std::string_view text);

/// Root mean squared difference of two equal-length vectors.
double calibration_error(std::span<const double> model, std::span<const double> market);

/// Summary statistics of daily log-returns plus the log-modulus of the
/// characteristic function at a few frequencies scaled by the sample sd.
struct ReturnStatistics {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  std::vector<double> frequencies;
  std::vector<double> log_cf_modulus;
};

/// Frequencies are c / sd for these c.
inline constexpr std::array<double, 4> kCfFrequencyMultipliers{0.5, 1.0, 2.0, 3.0};

std::vector<double> log_returns(const data::RawSeries& series);
std::vector<double> log_returns(std::span<const double> prices);

/// Needs at least 30 returns with positive variance.
ReturnStatistics empirical_statistics(std::span<const double> returns);

/// Analytic Merton statistics of log-returns over `dt`, at the given
/// characteristic-function frequencies.
ReturnStatistics merton_statistics(const processes::MertonParams& p,
                                   std::span<const double> frequencies, double dt = kTradingDt);

/// Residual vector whose squared norm is the moment loss:
///   (k1 - mean)/sd, log(k2/var), skew difference, log-ratio of kurtoses,
///   relative errors of log|cf| at each frequency.
std::vector<double> moment_residuals(const ReturnStatistics& model, const ReturnStatistics& market);

/// Residuals as model/market vectors of normalized statistics; their
/// difference equals moment_residuals.
std::pair<std::vector<double>, std::vector<double>> normalized_statistics(
    const ReturnStatistics& model, const ReturnStatistics& market);

double moment_loss(const processes::MertonParams& p, const ReturnStatistics& market);
double moment_loss(const processes::MertonParams& p, const data::RawSeries& series);

/// Gradient of moment_loss with respect to (mu, sigma, lambda, m, delta).
std::array<double, 5> moment_loss_gradient(const processes::MertonParams& p,
                                           const ReturnStatistics& market);

struct LogNormalPrior {
  double mu = 0.0;
  double sigma = 1.0;
};

struct RegularizationConfig {
  double lambda_reg = 0.0;
  std::optional<LogNormalPrior> lambda_prior;
  std::optional<LogNormalPrior> k_prior;

  bool active() const noexcept { return lambda_reg > 0.0 || lambda_prior || k_prior; }
};

void validate(const RegularizationConfig& reg);

/// -log of the log-normal density at x > 0.
double lognormal_neg_log_density(double x, const LogNormalPrior& prior);

/// base + lambda_reg * sigma / k + prior penalties on lambda and k.
double regularized_loss(double base, const processes::MertonParams& p,
                        const RegularizationConfig& reg);

/// Gradient of the penalty part with respect to (mu, sigma, lambda, m, delta).
std::array<double, 5> regularization_gradient(const processes::MertonParams& p,
                                              const RegularizationConfig& reg);

// Parameter boxes. Merton order: mu, sigma, lambda, m, delta.
// Fractional Heston order: mu, kappa, theta, xi, rho, hurst.
optim::Bounds default_merton_bounds();
optim::Bounds default_heston_bounds();

/// Simulated-moment setup for fractional Heston. The same seed is reused for
/// every evaluation so the loss is a smooth function of the parameters.
struct HestonMomentConfig {
  std::size_t n_paths = 16;
  std::size_t n_steps = 252;
  std::uint64_t seed = 0x5eed;
};

ReturnStatistics heston_statistics(const processes::HestonParams& p,
                                   std::span<const double> frequencies,
                                   const HestonMomentConfig& config = {});

/// v0 is tied to theta; beta stays at its default.
processes::HestonParams heston_from_vector(std::span<const double> x);

struct NetConfig {
  std::size_t input_size = 32;
  std::vector<std::size_t> hidden{16, 16};
  std::size_t epochs = 600;
  double lr = 5e-3;
  std::size_t heston_epochs = 120;
  double fd_step = 1e-4;  // relative step for the simulated Heston gradient
};

struct CalibrationResult {
  ModelKind model = ModelKind::merton;
  Method method = Method::nn;
  std::uint64_t seed = 0;
  double runtime_seconds = 0.0;
  double epsilon = 0.0;
  double loss = 0.0;
  processes::MertonParams merton;
  processes::HestonParams heston;
  std::vector<double> trace;  // loss per epoch (nn) or best-so-far (mpa)

  /// Everything except runtime_seconds.
  bool same_outcome(const CalibrationResult& other) const;
};

CalibrationResult nn_calibrate(const data::RawSeries& series, ModelKind model,
                               const NetConfig& net, const RegularizationConfig& reg,
                               std::uint64_t seed);

CalibrationResult mpa_calibrate(const data::RawSeries& series, ModelKind model,
                                optim::SearchConfig search, const RegularizationConfig& reg,
                                std::uint64_t seed);

}  // namespace levyforge::calibrate
