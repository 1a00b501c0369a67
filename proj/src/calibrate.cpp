#include "levyforge/calibrate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "levyforge/error.hpp"
#include "levyforge/neural.hpp"
#include "levyforge/rng.hpp"

namespace levyforge::calibrate {

using processes::HestonParams;
using processes::MertonParams;

std::string_view to_string(ModelKind kind) noexcept {
  return kind == ModelKind::merton ? "merton" : "fheston";
}

std::string_view to_string(Method method) noexcept { return method == Method::nn ? "nn" : "mpa"; }

ModelKind parse_model_kind(std::string_view text) {
  if (text == "merton") return ModelKind::merton;
  if (text == "fheston" || text == "fractional_heston") return ModelKind::fractional_heston;
  throw Error(ErrorKind::domain, "unknown model '" + std::string(text) + "' (expected merton or fheston)");
}

Method parse_method(std::string_view text) {
  if (text == "nn") return Method::nn;
  if (text == "mpa") return Method::mpa;
  if (text == "torchsde") {
    throw Error(ErrorKind::unsupported,
                "calibration method 'torchsde' is out of scope; use nn or mpa");
  }
  throw Error(ErrorKind::domain, "unknown calibration method '" + std::string(text) + "'");
}

double calibration_error(std::span<const double> model, std::span<const double> market) {
  require(model.size() == market.size(), ErrorKind::shape,
          "model and market vectors differ in length");
  require(!model.empty(), ErrorKind::shape, "calibration error of empty vectors");
  double sum = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const double e = model[i] - market[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(model.size()));
}

std::vector<double> log_returns(std::span<const double> prices) {
  require(prices.size() >= 2, ErrorKind::size, "need at least two prices for log-returns");
  std::vector<double> r(prices.size() - 1);
  for (std::size_t i = 1; i < prices.size(); ++i) {
    require(prices[i] > 0.0 && prices[i - 1] > 0.0, ErrorKind::domain, "prices must be positive");
    r[i - 1] = std::log(prices[i] / prices[i - 1]);
  }
  return r;
}

std::vector<double> log_returns(const data::RawSeries& series) { return log_returns(series.prices); }

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ReturnStatistics statistics_at(std::span<const double> r, std::span<const double> frequencies) {
  const auto n = static_cast<double>(r.size());
  double mean = 0.0;
  for (double x : r) mean += x;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : r) {
    const double c = x - mean;
    const double c2 = c * c;
    m2 += c2;
    m3 += c2 * c;
    m4 += c2 * c2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  require(m2 > 0.0 && std::isfinite(m2), ErrorKind::domain, "log-returns have zero variance");
  ReturnStatistics s;
  s.mean = mean;
  s.variance = m2;
  s.skewness = m3 / std::pow(m2, 1.5);
  s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  s.frequencies.assign(frequencies.begin(), frequencies.end());
  for (double u : frequencies) {
    double re = 0.0, im = 0.0;
    for (double x : r) {
      re += std::cos(u * x);
      im += std::sin(u * x);
    }
    const double modulus = std::hypot(re, im) / n;
    require(modulus > 0.0, ErrorKind::domain, "empirical characteristic function vanished");
    s.log_cf_modulus.push_back(std::log(modulus));
  }
  return s;
}

// Partial derivatives of the Merton statistics, parameter order
// mu, sigma, lambda, m, delta.
using Grad5 = std::array<double, 5>;

struct MertonStatGradient {
  Grad5 k1{}, k2{}, skew{}, exk{};
  std::vector<Grad5> psi;
};

MertonStatGradient merton_statistic_gradient(const MertonParams& p,
                                             std::span<const double> frequencies, double h) {
  const double s = p.sigma, l = p.lambda, m = p.m, d = p.delta;
  const double k = processes::expected_jump_size(m, d);
  const double d2 = d * d;
  const double k2 = s * s * h + l * h * (m * m + d2);
  const double k3 = l * h * (m * m * m + 3.0 * m * d2);
  const double k4 = l * h * (m * m * m * m + 6.0 * m * m * d2 + 3.0 * d2 * d2);

  MertonStatGradient g;
  g.k1 = {h, -s * h, (m - k) * h, -l * h * k, -l * h * d * (k + 1.0)};
  g.k2 = {0.0, 2.0 * s * h, h * (m * m + d2), 2.0 * l * h * m, 2.0 * l * h * d};
  const Grad5 dk3{0.0, 0.0, h * (m * m * m + 3.0 * m * d2), 3.0 * l * h * (m * m + d2),
                  6.0 * l * h * m * d};
  const Grad5 dk4{0.0, 0.0, h * (m * m * m * m + 6.0 * m * m * d2 + 3.0 * d2 * d2),
                  l * h * (4.0 * m * m * m + 12.0 * m * d2), l * h * (12.0 * m * m * d + 12.0 * d2 * d)};
  for (std::size_t j = 0; j < 5; ++j) {
    g.skew[j] = dk3[j] / std::pow(k2, 1.5) - 1.5 * k3 / std::pow(k2, 2.5) * g.k2[j];
    g.exk[j] = dk4[j] / (k2 * k2) - 2.0 * k4 / (k2 * k2 * k2) * g.k2[j];
  }
  for (double u : frequencies) {
    const double e = std::exp(-d2 * u * u / 2.0);
    const double c = std::cos(u * m);
    g.psi.push_back(Grad5{0.0, -h * s * u * u, h * (e * c - 1.0), -h * l * e * u * std::sin(u * m),
                          -h * l * c * e * d * u * u});
  }
  return g;
}

void require_comparable(const ReturnStatistics& model, const ReturnStatistics& market) {
  require(model.log_cf_modulus.size() == market.log_cf_modulus.size(), ErrorKind::shape,
          "model and market statistics use different frequency sets");
}

}  // namespace

ReturnStatistics empirical_statistics(std::span<const double> returns) {
  require(returns.size() >= 30, ErrorKind::size, "need at least 30 log-returns");
  double mean = 0.0;
  for (double x : returns) mean += x;
  mean /= static_cast<double>(returns.size());
  double var = 0.0;
  for (double x : returns) var += (x - mean) * (x - mean);
  var /= static_cast<double>(returns.size());
  require(var > 0.0, ErrorKind::domain, "log-returns have zero variance");
  const double sd = std::sqrt(var);
  std::vector<double> freq;
  for (double c : kCfFrequencyMultipliers) freq.push_back(c / sd);
  return statistics_at(returns, freq);
}

ReturnStatistics merton_statistics(const MertonParams& p, std::span<const double> frequencies,
                                   double dt) {
  const auto c = processes::merton_cumulants(p, dt);
  require(c.k2 > 0.0, ErrorKind::domain, "model log-return variance is zero");
  ReturnStatistics s;
  s.mean = c.k1;
  s.variance = c.k2;
  s.skewness = c.k3 / std::pow(c.k2, 1.5);
  s.excess_kurtosis = c.k4 / (c.k2 * c.k2);
  s.frequencies.assign(frequencies.begin(), frequencies.end());
  for (double u : frequencies) {
    const double psi = -p.sigma * p.sigma * u * u / 2.0 +
                       p.lambda * (std::exp(-p.delta * p.delta * u * u / 2.0) * std::cos(u * p.m) - 1.0);
    s.log_cf_modulus.push_back(dt * psi);
  }
  return s;
}

std::vector<double> moment_residuals(const ReturnStatistics& model, const ReturnStatistics& market) {
  require_comparable(model, market);
  std::vector<double> r;
  r.reserve(4 + model.log_cf_modulus.size());
  r.push_back((model.mean - market.mean) / std::sqrt(market.variance));
  r.push_back(std::log(model.variance / market.variance));
  r.push_back(model.skewness - market.skewness);
  r.push_back(std::log((model.excess_kurtosis + 3.0) / (market.excess_kurtosis + 3.0)));
  for (std::size_t j = 0; j < model.log_cf_modulus.size(); ++j) {
    r.push_back((model.log_cf_modulus[j] - market.log_cf_modulus[j]) / market.log_cf_modulus[j]);
  }
  return r;
}

std::pair<std::vector<double>, std::vector<double>> normalized_statistics(
    const ReturnStatistics& model, const ReturnStatistics& market) {
  require_comparable(model, market);
  const double sd = std::sqrt(market.variance);
  std::vector<double> a{model.mean / sd, std::log(model.variance), model.skewness,
                        std::log(model.excess_kurtosis + 3.0)};
  std::vector<double> b{market.mean / sd, std::log(market.variance), market.skewness,
                        std::log(market.excess_kurtosis + 3.0)};
  for (std::size_t j = 0; j < model.log_cf_modulus.size(); ++j) {
    a.push_back(model.log_cf_modulus[j] / market.log_cf_modulus[j]);
    b.push_back(1.0);
  }
  return {a, b};
}

double moment_loss(const MertonParams& p, const ReturnStatistics& market) {
  processes::validate(p);
  double loss = 0.0;
  for (double r : moment_residuals(merton_statistics(p, market.frequencies), market)) loss += r * r;
  return loss;
}

double moment_loss(const MertonParams& p, const data::RawSeries& series) {
  return moment_loss(p, empirical_statistics(log_returns(series)));
}

std::array<double, 5> moment_loss_gradient(const MertonParams& p, const ReturnStatistics& market) {
  processes::validate(p);
  const ReturnStatistics model = merton_statistics(p, market.frequencies);
  const std::vector<double> r = moment_residuals(model, market);
  const MertonStatGradient g = merton_statistic_gradient(p, market.frequencies, kTradingDt);
  const double sd = std::sqrt(market.variance);
  std::array<double, 5> out{};
  for (std::size_t j = 0; j < 5; ++j) {
    double v = r[0] * g.k1[j] / sd + r[1] * g.k2[j] / model.variance + r[2] * g.skew[j] +
               r[3] * g.exk[j] / (model.excess_kurtosis + 3.0);
    for (std::size_t q = 0; q < g.psi.size(); ++q) {
      v += r[4 + q] * g.psi[q][j] / market.log_cf_modulus[q];
    }
    out[j] = 2.0 * v;
  }
  return out;
}

void validate(const RegularizationConfig& reg) {
  require(reg.lambda_reg >= 0.0 && std::isfinite(reg.lambda_reg), ErrorKind::domain,
          "lambda_reg must be finite and non-negative");
  for (const auto* prior : {&reg.lambda_prior, &reg.k_prior}) {
    if (*prior) {
      require((*prior)->sigma > 0.0 && std::isfinite((*prior)->mu), ErrorKind::domain,
              "prior sigma must be positive");
    }
  }
}

double lognormal_neg_log_density(double x, const LogNormalPrior& prior) {
  require(x > 0.0, ErrorKind::domain, "log-normal prior evaluated at a non-positive value");
  const double z = (std::log(x) - prior.mu) / prior.sigma;
  return std::log(x) + std::log(prior.sigma) + 0.5 * std::log(2.0 * std::numbers::pi) + 0.5 * z * z;
}

double regularized_loss(double base, const MertonParams& p, const RegularizationConfig& reg) {
  validate(reg);
  if (!reg.active()) return base;
  const double k = p.k();
  double out = base;
  if (reg.lambda_reg > 0.0) {
    require(k > 0.0, ErrorKind::domain, "sigma/k penalty needs k > 0");
    out += reg.lambda_reg * p.sigma / k;
  }
  if (reg.lambda_prior) out += lognormal_neg_log_density(p.lambda, *reg.lambda_prior);
  if (reg.k_prior) out += lognormal_neg_log_density(k, *reg.k_prior);
  return out;
}

std::array<double, 5> regularization_gradient(const MertonParams& p, const RegularizationConfig& reg) {
  std::array<double, 5> g{};
  if (!reg.active()) return g;
  const double k = p.k();
  double dk = 0.0;  // d penalty / d k
  if (reg.lambda_reg > 0.0) {
    require(k > 0.0, ErrorKind::domain, "sigma/k penalty needs k > 0");
    g[1] += reg.lambda_reg / k;
    dk += -reg.lambda_reg * p.sigma / (k * k);
  }
  auto dneglog = [](double x, const LogNormalPrior& pr) {
    require(x > 0.0, ErrorKind::domain, "log-normal prior evaluated at a non-positive value");
    return 1.0 / x + (std::log(x) - pr.mu) / (pr.sigma * pr.sigma * x);
  };
  if (reg.lambda_prior) g[2] += dneglog(p.lambda, *reg.lambda_prior);
  if (reg.k_prior) dk += dneglog(k, *reg.k_prior);
  g[3] += dk * (k + 1.0);
  g[4] += dk * (k + 1.0) * p.delta;
  return g;
}

optim::Bounds default_merton_bounds() {
  return {{-1.0, 0.001, 0.0, -1.0, 0.001}, {1.0, 2.0, 10.0, 1.0, 1.0}};
}

optim::Bounds default_heston_bounds() {
  return {{-1.0, 0.01, 0.001, 0.01, -0.99, 0.51}, {1.0, 5.0, 1.0, 2.0, 0.99, 0.99}};
}

HestonParams heston_from_vector(std::span<const double> x) {
  require(x.size() == 6, ErrorKind::shape, "fractional Heston vector needs 6 entries");
  HestonParams p;
  p.mu = x[0];
  p.kappa = x[1];
  p.theta = x[2];
  p.xi = x[3];
  p.rho = x[4];
  p.hurst = x[5];
  p.v0 = p.theta;
  return p;
}

ReturnStatistics heston_statistics(const HestonParams& p, std::span<const double> frequencies,
                                   const HestonMomentConfig& config) {
  const processes::SimGrid grid{static_cast<double>(config.n_steps) * kTradingDt, config.n_steps, 1.0};
  const auto paths = processes::simulate_fractional_heston(p, grid, config.n_paths, config.seed);
  std::vector<double> r;
  r.reserve(config.n_paths * config.n_steps);
  for (std::size_t i = 0; i < config.n_paths; ++i) {
    const auto lr = log_returns(paths.prices.path(i));
    r.insert(r.end(), lr.begin(), lr.end());
  }
  return statistics_at(r, frequencies);
}

bool CalibrationResult::same_outcome(const CalibrationResult& o) const {
  auto same_m = [](const MertonParams& a, const MertonParams& b) {
    return a.mu == b.mu && a.sigma == b.sigma && a.lambda == b.lambda && a.m == b.m && a.delta == b.delta;
  };
  auto same_h = [](const HestonParams& a, const HestonParams& b) {
    return a.mu == b.mu && a.kappa == b.kappa && a.theta == b.theta && a.xi == b.xi &&
           a.rho == b.rho && a.v0 == b.v0 && a.hurst == b.hurst && a.beta == b.beta;
  };
  return model == o.model && method == o.method && seed == o.seed && epsilon == o.epsilon &&
         loss == o.loss && same_m(merton, o.merton) && same_h(heston, o.heston) && trace == o.trace;
}

namespace {

constexpr double kMinK = 1e-4;
constexpr double kMinPriorLambda = 1e-4;

// Search coordinates for Merton. Without regularization they are the model
// parameters themselves. With it, the fourth coordinate is k instead of m so
// that every point of the box has k > 0 and the penalty stays finite.
struct MertonSpace {
  optim::Bounds box;
  bool k_coordinate = false;

  explicit MertonSpace(const RegularizationConfig& reg) : box(default_merton_bounds()) {
    if (reg.active()) {
      k_coordinate = true;
      box.lower[3] = kMinK;
      box.upper[3] = std::numbers::e - 1.0;
    }
    if (reg.lambda_prior) box.lower[2] = kMinPriorLambda;
  }

  MertonParams params(std::span<const double> x) const {
    MertonParams p{x[0], x[1], x[2], x[3], x[4]};
    if (k_coordinate) p.m = std::log1p(x[3]) - 0.5 * x[4] * x[4];
    return p;
  }

  // Chain rule from model-parameter gradient to search coordinates.
  std::array<double, 5> pullback(std::span<const double> x, const std::array<double, 5>& g) const {
    std::array<double, 5> out = g;
    if (k_coordinate) {
      out[3] = g[3] / (1.0 + x[3]);
      out[4] = g[4] - g[3] * x[4];
    }
    return out;
  }
};

double merton_objective(const MertonParams& p, const ReturnStatistics& market,
                        const RegularizationConfig& reg) {
  return regularized_loss(moment_loss(p, market), p, reg);
}

double heston_objective(std::span<const double> x, const ReturnStatistics& market,
                        const HestonMomentConfig& sim) {
  const ReturnStatistics model = heston_statistics(heston_from_vector(x), market.frequencies, sim);
  double loss = 0.0;
  for (double r : moment_residuals(model, market)) loss += r * r;
  return loss;
}

double epsilon_of(const ReturnStatistics& model, const ReturnStatistics& market) {
  const auto [a, b] = normalized_statistics(model, market);
  return calibration_error(a, b);
}

// Minimal linear resampling of the normalized price path to the net's input width.
std::vector<double> net_input(const data::RawSeries& series, std::size_t width) {
  const auto scaler = data::fit_minmax(series);
  const std::vector<double> z = scaler.transform(series.prices);
  std::vector<double> out(width);
  const double span = static_cast<double>(z.size() - 1);
  for (std::size_t i = 0; i < width; ++i) {
    const double pos = width == 1 ? span : span * static_cast<double>(i) / static_cast<double>(width - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, z.size() - 1);
    const double t = pos - static_cast<double>(lo);
    out[i] = (1.0 - t) * z[lo] + t * z[hi];
  }
  return out;
}

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void finish_merton(CalibrationResult& res, const MertonParams& p, const ReturnStatistics& market,
                   const RegularizationConfig& reg) {
  res.merton = p;
  res.loss = merton_objective(p, market, reg);
  res.epsilon = epsilon_of(merton_statistics(p, market.frequencies), market);
}

void finish_heston(CalibrationResult& res, std::span<const double> x, const ReturnStatistics& market,
                   const HestonMomentConfig& sim) {
  res.heston = heston_from_vector(x);
  const ReturnStatistics model = heston_statistics(res.heston, market.frequencies, sim);
  res.loss = heston_objective(x, market, sim);
  res.epsilon = epsilon_of(model, market);
}

}  // namespace

CalibrationResult nn_calibrate(const data::RawSeries& series, ModelKind model, const NetConfig& cfg,
                               const RegularizationConfig& reg, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  data::validate(series);
  validate(reg);
  require(cfg.input_size > 0 && cfg.lr > 0.0, ErrorKind::domain, "invalid network configuration");
  const ReturnStatistics market = empirical_statistics(log_returns(series));
  const std::vector<double> input = net_input(series, cfg.input_size);

  const bool merton = model == ModelKind::merton;
  const MertonSpace mspace(reg);
  const optim::Bounds box = merton ? mspace.box : default_heston_bounds();
  const std::size_t n_out = box.dim();
  if (!merton) {
    require(!reg.active(), ErrorKind::unsupported,
            "the sigma/k penalty and priors apply to Merton calibration only");
  }

  std::vector<std::size_t> dims{cfg.input_size};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(n_out);
  neural::DenseNet net(dims, stream_seed(seed, 0));
  neural::AdamState adam(net.parameter_count(), cfg.lr);
  const HestonMomentConfig sim{};

  CalibrationResult res;
  res.model = model;
  res.method = Method::nn;
  res.seed = seed;
  std::vector<double> best_x;
  double best_loss = kInf;
  const std::size_t epochs = merton ? cfg.epochs : cfg.heston_epochs;
  std::vector<double> x(n_out), dx(n_out), dout(n_out);

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    auto fwd = neural::dense_forward(net, input);
    for (std::size_t j = 0; j < n_out; ++j) {
      const double s = logistic(fwd.output[static_cast<Eigen::Index>(j)]);
      x[j] = box.lower[j] + (box.upper[j] - box.lower[j]) * s;
      dx[j] = (box.upper[j] - box.lower[j]) * s * (1.0 - s);
    }
    double loss = 0.0;
    std::vector<double> grad(n_out);
    if (merton) {
      const MertonParams p = mspace.params(x);
      loss = merton_objective(p, market, reg);
      auto g = moment_loss_gradient(p, market);
      const auto gr = regularization_gradient(p, reg);
      for (std::size_t j = 0; j < 5; ++j) g[j] += gr[j];
      const auto gx = mspace.pullback(x, g);
      grad.assign(gx.begin(), gx.end());
    } else {
      loss = heston_objective(x, market, sim);
      for (std::size_t j = 0; j < n_out; ++j) {
        const double h = cfg.fd_step * (box.upper[j] - box.lower[j]);
        std::vector<double> xp = x, xm = x;
        xp[j] = std::min(x[j] + h, box.upper[j]);
        xm[j] = std::max(x[j] - h, box.lower[j]);
        grad[j] = (heston_objective(xp, market, sim) - heston_objective(xm, market, sim)) / (xp[j] - xm[j]);
      }
    }
    if (!std::isfinite(loss)) {
      throw Error(ErrorKind::calibration,
                  "loss became non-finite at epoch " + std::to_string(epoch + 1));
    }
    res.trace.push_back(loss);
    if (loss < best_loss) {
      best_loss = loss;
      best_x = x;
    }
    for (std::size_t j = 0; j < n_out; ++j) dout[j] = grad[j] * dx[j];
    const auto g = neural::dense_backward(net, fwd.cache, dout);
    neural::adam_step(adam, net.mutable_parameters(), g);
  }

  if (merton) {
    finish_merton(res, mspace.params(best_x), market, reg);
  } else {
    finish_heston(res, best_x, market, sim);
  }
  res.runtime_seconds = seconds_since(start);
  return res;
}

CalibrationResult mpa_calibrate(const data::RawSeries& series, ModelKind model,
                                optim::SearchConfig search, const RegularizationConfig& reg,
                                std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  data::validate(series);
  validate(reg);
  const ReturnStatistics market = empirical_statistics(log_returns(series));
  search.seed = seed;

  CalibrationResult res;
  res.model = model;
  res.method = Method::mpa;
  res.seed = seed;
  if (model == ModelKind::merton) {
    const MertonSpace space(reg);
    const auto result = optim::mpa_minimize(
        [&](std::span<const double> x) { return merton_objective(space.params(x), market, reg); },
        space.box, search);
    res.trace = result.history;
    finish_merton(res, space.params(result.best.position), market, reg);
  } else {
    require(!reg.active(), ErrorKind::unsupported,
            "the sigma/k penalty and priors apply to Merton calibration only");
    const HestonMomentConfig sim{};
    const auto result = optim::mpa_minimize(
        [&](std::span<const double> x) { return heston_objective(x, market, sim); },
        default_heston_bounds(), search);
    res.trace = result.history;
    finish_heston(res, result.best.position, market, sim);
  }
  require(std::isfinite(res.loss), ErrorKind::calibration, "calibration produced a non-finite loss");
  res.runtime_seconds = seconds_since(start);
  return res;
}

}  // namespace levyforge::calibrate
