#include <sstream>

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cli.hpp"
#include "levyforge/calibrate.hpp"
#include "levyforge/error.hpp"
#include "levyforge/forecast.hpp"
#include "levyforge/heston.hpp"
#include "levyforge/levy.hpp"
#include "levyforge/optimizers.hpp"
#include "levyforge/processes.hpp"

namespace py = pybind11;
using namespace levyforge;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

Array to_array(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array paths_array(const processes::PathSet& p) {
  Array out({static_cast<py::ssize_t>(p.n_paths()), static_cast<py::ssize_t>(p.n_points())});
  std::copy(p.values().begin(), p.values().end(), out.mutable_data());
  return out;
}

processes::MertonScheme scheme_from(const std::string& s) {
  if (s == "jump_adapted") return processes::MertonScheme::jump_adapted;
  if (s == "log_euler") return processes::MertonScheme::log_euler;
  throw py::value_error("scheme must be 'jump_adapted' or 'log_euler'");
}

py::dict search_dict(const optim::SearchResult& r) {
  py::dict d;
  d["x"] = to_array(r.best.position);
  d["fun"] = r.best.fitness;
  d["history"] = to_array(r.history);
  d["evaluations"] = r.evaluations;
  return d;
}

optim::Objective wrap(const py::function& f) {
  return [f](std::span<const double> x) {
    py::gil_scoped_acquire gil;
    return f(to_array({x.begin(), x.end()})).cast<double>();
  };
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "levyforge native core";

  py::register_exception<Error>(m, "LevyforgeError", PyExc_ValueError);

  py::class_<processes::MertonParams>(m, "MertonParams")
      .def(py::init([](double mu, double sigma, double lambda, double mm, double delta) {
             processes::MertonParams p{mu, sigma, lambda, mm, delta};
             processes::validate(p);
             return p;
           }),
           py::arg("mu"), py::arg("sigma"), py::arg("lam"), py::arg("m"), py::arg("delta"))
      .def_readwrite("mu", &processes::MertonParams::mu)
      .def_readwrite("sigma", &processes::MertonParams::sigma)
      .def_readwrite("lam", &processes::MertonParams::lambda)
      .def_readwrite("m", &processes::MertonParams::m)
      .def_readwrite("delta", &processes::MertonParams::delta)
      .def_property_readonly("k", &processes::MertonParams::k)
      .def("__repr__", [](const processes::MertonParams& p) {
        std::ostringstream os;
        os << "MertonParams(mu=" << p.mu << ", sigma=" << p.sigma << ", lam=" << p.lambda << ", m=" << p.m
           << ", delta=" << p.delta << ")";
        return os.str();
      });

  py::class_<processes::HestonParams>(m, "HestonParams")
      .def(py::init([](double mu, double kappa, double theta, double xi, double rho, double v0, double hurst) {
             processes::HestonParams p;
             p.mu = mu;
             p.kappa = kappa;
             p.theta = theta;
             p.xi = xi;
             p.rho = rho;
             p.v0 = v0;
             p.hurst = hurst;
             processes::validate(p);
             return p;
           }),
           py::arg("mu") = 0.0, py::arg("kappa") = 1.0, py::arg("theta") = 0.04, py::arg("xi") = 0.3,
           py::arg("rho") = -0.5, py::arg("v0") = 0.04, py::arg("hurst") = 0.7)
      .def_readwrite("mu", &processes::HestonParams::mu)
      .def_readwrite("kappa", &processes::HestonParams::kappa)
      .def_readwrite("theta", &processes::HestonParams::theta)
      .def_readwrite("xi", &processes::HestonParams::xi)
      .def_readwrite("rho", &processes::HestonParams::rho)
      .def_readwrite("v0", &processes::HestonParams::v0)
      .def_readwrite("hurst", &processes::HestonParams::hurst);

  m.def("expected_jump_size", &processes::expected_jump_size, py::arg("m"), py::arg("delta"));

  m.def(
      "simulate_merton",
      [](const processes::MertonParams& p, double t_end, std::size_t n_steps, double s0, std::size_t n_paths,
         std::uint64_t seed, const std::string& scheme) {
        return paths_array(processes::simulate_merton(p, {t_end, n_steps, s0}, n_paths, seed, scheme_from(scheme)));
      },
      py::arg("params"), py::arg("t_end"), py::arg("n_steps"), py::arg("s0") = 100.0, py::arg("n_paths") = 1,
      py::arg("seed") = 0, py::arg("scheme") = "jump_adapted",
      "Paths as an (n_paths, n_steps + 1) array.");

  m.def(
      "simulate_fractional_heston",
      [](const processes::HestonParams& p, double t_end, std::size_t n_steps, double s0, std::size_t n_paths,
         std::uint64_t seed) {
        const auto r = processes::simulate_fractional_heston(p, {t_end, n_steps, s0}, n_paths, seed);
        return py::make_tuple(paths_array(r.prices), paths_array(r.variances));
      },
      py::arg("params"), py::arg("t_end"), py::arg("n_steps"), py::arg("s0") = 100.0, py::arg("n_paths") = 1,
      py::arg("seed") = 0);

  m.def(
      "sample_alpha_stable",
      [](double alpha, double beta, double scale, double loc, std::size_t n, std::uint64_t seed) {
        return to_array(processes::sample_alpha_stable({alpha, beta, loc, scale}, n, seed));
      },
      py::arg("alpha"), py::arg("beta") = 0.0, py::arg("scale") = 1.0, py::arg("loc") = 0.0, py::arg("n") = 1,
      py::arg("seed") = 0);

  m.def(
      "calibrate",
      [](const Array& prices, const std::string& model, const std::string& method, std::uint64_t seed) {
        const auto series = data::from_prices(to_vector(prices));
        const auto kind = calibrate::parse_model_kind(model);
        const auto r = calibrate::parse_method(method) == calibrate::Method::nn
                           ? calibrate::nn_calibrate(series, kind, {}, {}, seed)
                           : calibrate::mpa_calibrate(series, kind, {}, {}, seed);
        py::dict d;
        d["model"] = calibrate::to_string(r.model);
        d["method"] = calibrate::to_string(r.method);
        d["epsilon"] = r.epsilon;
        d["loss"] = r.loss;
        d["runtime_seconds"] = r.runtime_seconds;
        if (r.model == calibrate::ModelKind::merton)
          d["params"] = r.merton;
        else
          d["params"] = r.heston;
        return d;
      },
      py::arg("prices"), py::arg("model") = "merton", py::arg("method") = "nn", py::arg("seed") = 0,
      "Calibrates to a daily price series and returns a result dict.");

  m.def(
      "gwo_minimize",
      [](const py::function& f, std::vector<double> lower, std::vector<double> upper, std::size_t population,
         std::size_t iterations, std::uint64_t seed) {
        return search_dict(optim::gwo_minimize(wrap(f), {lower, upper}, {population, iterations, seed}));
      },
      py::arg("fun"), py::arg("lower"), py::arg("upper"), py::arg("population") = 30, py::arg("iterations") = 100,
      py::arg("seed") = 0);
  m.def(
      "mpa_minimize",
      [](const py::function& f, std::vector<double> lower, std::vector<double> upper, std::size_t population,
         std::size_t iterations, std::uint64_t seed) {
        return search_dict(optim::mpa_minimize(wrap(f), {lower, upper}, {population, iterations, seed}));
      },
      py::arg("fun"), py::arg("lower"), py::arg("upper"), py::arg("population") = 30, py::arg("iterations") = 100,
      py::arg("seed") = 0);

  m.def(
      "hybrid_forecast",
      [](const Array& lstm_point, const processes::MertonParams& p, const Array& anchors, double weight,
         std::size_t n_mc_paths, std::uint64_t seed) {
        forecast::HybridConfig cfg;
        cfg.weight = weight;
        cfg.n_mc_paths = n_mc_paths;
        cfg.seed = seed;
        const auto r = forecast::hybrid_forecast(to_vector(lstm_point), p, to_vector(anchors), cfg);
        py::dict d;
        d["point"] = to_array(r.point);
        d["lower"] = to_array(r.lower);
        d["upper"] = to_array(r.upper);
        d["mc_mean"] = to_array(r.mc_mean);
        return d;
      },
      py::arg("lstm_point"), py::arg("params"), py::arg("anchors"), py::arg("weight") = 0.5,
      py::arg("n_mc_paths") = 2000, py::arg("seed") = 0);

  m.def(
      "compute_metrics",
      [](const Array& pred, const Array& actual) {
        const auto r = forecast::compute_metrics(to_vector(pred), to_vector(actual));
        py::dict d;
        d["mae"] = r.mae;
        d["mse"] = r.mse;
        d["rmse"] = r.rmse;
        d["mspe"] = r.mspe;
        d["r2"] = r.r2;
        return d;
      },
      py::arg("pred"), py::arg("actual"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a levyforge command; returns (exit_code, stdout, stderr).");
}
