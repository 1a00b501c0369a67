#include "levyforge/serialize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "levyforge/error.hpp"

namespace levyforge::io {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

const Json& field(const Json& j, const char* key) {
  require(j.is_object() && j.contains(key), ErrorKind::parse,
          std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const Json& j, const char* key) {
  const Json& v = field(j, key);
  require(v.is_number(), ErrorKind::parse, std::string("field '") + key + "' is not a number");
  return v.get<double>();
}

void expect_kind(const Json& j, const char* kind) {
  require(field(j, "kind") == kind, ErrorKind::parse,
          std::string("expected a '") + kind + "' object");
}

void expect_version(const Json& j) {
  require(field(j, "version") == kNetworkFormat, ErrorKind::parse,
          std::string("unsupported checkpoint version, expected ") + kNetworkFormat);
}

std::vector<double> doubles(const Json& j, const char* key, std::size_t expected) {
  const Json& v = field(j, key);
  require(v.is_array() && v.size() == expected, ErrorKind::shape,
          std::string("field '") + key + "' has the wrong length");
  return v.get<std::vector<double>>();
}

}  // namespace

Json to_json(const data::StandardScaler& s) { return {{"kind", "standard"}, {"a", s.mean}, {"b", s.std}}; }
Json to_json(const data::MinMaxScaler& s) { return {{"kind", "minmax"}, {"a", s.min}, {"b", s.max}}; }

data::StandardScaler standard_scaler_from_json(const Json& j) {
  expect_kind(j, "standard");
  data::StandardScaler s{number(j, "a"), number(j, "b")};
  require(s.std > 0.0, ErrorKind::domain, "standard scaler needs std > 0");
  return s;
}

data::MinMaxScaler minmax_scaler_from_json(const Json& j) {
  expect_kind(j, "minmax");
  data::MinMaxScaler s{number(j, "a"), number(j, "b")};
  require(s.max > s.min, ErrorKind::domain, "min-max scaler needs max > min");
  return s;
}

Json to_json(const neural::DenseNet& net) {
  Json layers = Json::array();
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    const auto W = net.weights(l);
    const auto b = net.biases(l);
    layers.push_back({{"weights", std::vector<double>(W.data(), W.data() + W.size())},
                      {"biases", std::vector<double>(b.data(), b.data() + b.size())}});
  }
  return {{"version", kNetworkFormat}, {"kind", "dense"}, {"layer_dims", net.layer_dims()},
          {"layers", layers}};
}

neural::DenseNet dense_from_json(const Json& j) {
  expect_version(j);
  expect_kind(j, "dense");
  auto dims = field(j, "layer_dims").get<std::vector<std::size_t>>();
  neural::DenseNet net = neural::DenseNet::zeros(dims);
  const Json& layers = field(j, "layers");
  require(layers.is_array() && layers.size() == net.n_layers(), ErrorKind::shape,
          "layer count does not match layer_dims");
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    const auto w = doubles(layers[l], "weights", dims[l + 1] * dims[l]);
    const auto b = doubles(layers[l], "biases", dims[l + 1]);
    auto W = net.mutable_weights(l);
    std::copy(w.begin(), w.end(), W.data());
    auto B = net.mutable_biases(l);
    std::copy(b.begin(), b.end(), B.data());
  }
  return net;
}

namespace {

constexpr std::pair<neural::Gate, const char*> kGateNames[] = {
    {neural::Gate::forget, "f"}, {neural::Gate::input, "i"},
    {neural::Gate::candidate, "C"}, {neural::Gate::output, "o"}};

}  // namespace

Json to_json(const neural::LstmWeights& w) {
  Json gates = Json::object();
  for (const auto& [g, name] : kGateNames) {
    const auto W = w.gate(g);
    const auto b = w.gate_bias(g);
    gates[std::string("W_") + name] = std::vector<double>(W.data(), W.data() + W.size());
    gates[std::string("b_") + name] = std::vector<double>(b.data(), b.data() + b.size());
  }
  const auto head = w.head_weights();
  return {{"version", kNetworkFormat},
          {"kind", "lstm"},
          {"layer_dims", {w.input_size(), w.hidden_size(), 1}},
          {"gates", gates},
          {"head_weights", std::vector<double>(head.data(), head.data() + head.size())},
          {"head_bias", w.head_bias()}};
}

neural::LstmWeights lstm_from_json(const Json& j) {
  expect_version(j);
  expect_kind(j, "lstm");
  const auto dims = field(j, "layer_dims").get<std::vector<std::size_t>>();
  require(dims.size() == 3 && dims[2] == 1, ErrorKind::shape, "lstm layer_dims must be [input, hidden, 1]");
  auto w = neural::LstmWeights::zeros(dims[0], dims[1]);
  const Json& gates = field(j, "gates");
  for (const auto& [g, name] : kGateNames) {
    const auto Wv = doubles(gates, (std::string("W_") + name).c_str(), dims[1] * (dims[0] + dims[1]));
    const auto bv = doubles(gates, (std::string("b_") + name).c_str(), dims[1]);
    auto W = w.mutable_gate(g);
    std::copy(Wv.begin(), Wv.end(), W.data());
    auto b = w.mutable_gate_bias(g);
    std::copy(bv.begin(), bv.end(), b.data());
  }
  const auto head = doubles(j, "head_weights", dims[1]);
  auto h = w.mutable_head_weights();
  std::copy(head.begin(), head.end(), h.data());
  w.set_head_bias(number(j, "head_bias"));
  return w;
}

Json to_json(const processes::MertonParams& p) {
  return {{"mu", p.mu}, {"sigma", p.sigma}, {"lambda", p.lambda}, {"m", p.m}, {"delta", p.delta}};
}

Json to_json(const processes::HestonParams& p) {
  return {{"mu", p.mu},     {"kappa", p.kappa}, {"theta", p.theta}, {"xi", p.xi},
          {"rho", p.rho},   {"v0", p.v0},       {"hurst", p.hurst}, {"beta", p.beta}};
}

processes::MertonParams merton_from_json(const Json& j) {
  processes::MertonParams p{number(j, "mu"), number(j, "sigma"), number(j, "lambda"), number(j, "m"),
                            number(j, "delta")};
  processes::validate(p);
  return p;
}

processes::HestonParams heston_from_json(const Json& j) {
  processes::HestonParams p;
  p.mu = number(j, "mu");
  p.kappa = number(j, "kappa");
  p.theta = number(j, "theta");
  p.xi = number(j, "xi");
  p.rho = number(j, "rho");
  p.v0 = j.contains("v0") ? number(j, "v0") : p.theta;
  p.hurst = number(j, "hurst");
  if (j.contains("beta")) p.beta = number(j, "beta");
  processes::validate(p);
  return p;
}

Json to_json(const calibrate::CalibrationResult& r) {
  const bool merton = r.model == calibrate::ModelKind::merton;
  return {{"model", calibrate::to_string(r.model)},
          {"method", calibrate::to_string(r.method)},
          {"seed", r.seed},
          {"runtime_seconds", r.runtime_seconds},
          {"epsilon", r.epsilon},
          {"loss", r.loss},
          {"params", merton ? to_json(r.merton) : to_json(r.heston)}};
}

calibrate::CalibrationResult calibration_from_json(const Json& j) {
  calibrate::CalibrationResult r;
  r.model = calibrate::parse_model_kind(field(j, "model").get<std::string>());
  r.method = calibrate::parse_method(field(j, "method").get<std::string>());
  r.seed = field(j, "seed").get<std::uint64_t>();
  r.runtime_seconds = number(j, "runtime_seconds");
  r.epsilon = number(j, "epsilon");
  if (j.contains("loss")) r.loss = number(j, "loss");
  if (r.model == calibrate::ModelKind::merton) {
    r.merton = merton_from_json(field(j, "params"));
  } else {
    r.heston = heston_from_json(field(j, "params"));
  }
  return r;
}

Json to_json(const forecast::MetricsReport& m) {
  Json j = Json::object();
  j["mae"] = m.mae;
  j["mse"] = m.mse;
  j["rmse"] = m.rmse;
  j["mspe"] = m.mspe;
  j["r2"] = m.r2;
  return j;
}

std::string pathset_csv(const processes::PathSet& paths) {
  std::string out = "t";
  for (std::size_t i = 0; i < paths.n_paths(); ++i) out += ",path_" + std::to_string(i);
  out += '\n';
  for (std::size_t t = 0; t < paths.n_points(); ++t) {
    out += format_double(paths.grid().time(t));
    for (std::size_t i = 0; i < paths.n_paths(); ++i) {
      out += ',';
      out += format_double(paths.path(i)[t]);
    }
    out += '\n';
  }
  return out;
}

Json to_json(const processes::PathSet& paths) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < paths.n_paths(); ++i) {
    const auto p = paths.path(i);
    rows.push_back(std::vector<double>(p.begin(), p.end()));
  }
  const auto& g = paths.grid();
  return {{"grid", {{"t_end", g.t_end}, {"n_steps", g.n_steps}, {"s0", g.s0}}}, {"paths", rows}};
}

std::string forecast_csv(const forecast::ForecastResult& f, std::optional<std::span<const double>> actual) {
  require(!actual || actual->size() == f.point.size(), ErrorKind::shape,
          "actual values do not match the forecast length");
  std::string out = actual ? "step,point,lower,upper,actual\n" : "step,point,lower,upper\n";
  for (std::size_t t = 0; t < f.point.size(); ++t) {
    out += std::to_string(t) + ',' + format_double(f.point[t]) + ',' + format_double(f.lower[t]) + ',' +
           format_double(f.upper[t]);
    if (actual) out += ',' + format_double((*actual)[t]);
    out += '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::io, "cannot open " + path.string() + " for writing");
  os << text;
  require(static_cast<bool>(os), ErrorKind::io, "failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace levyforge::io
