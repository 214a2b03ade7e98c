#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "sublab/harness.hpp"
#include "sublab/spectral.hpp"
#include "sublab/subordinator.hpp"

namespace py = pybind11;
using namespace sublab;

namespace {

DiscreteMeasure to_measure(py::array_t<double, py::array::c_style | py::array::forcecast> points,
                           std::optional<py::array_t<double, py::array::c_style | py::array::forcecast>> weights) {
  DiscreteMeasure m;
  if (points.ndim() == 1) {
    m.dim = 1;
  } else if (points.ndim() == 2) {
    m.dim = static_cast<int>(points.shape(1));
  } else {
    throw DomainError("points must be a 1D or 2D array");
  }
  const std::size_t n = static_cast<std::size_t>(points.shape(0));
  m.coords.assign(points.data(), points.data() + points.size());
  if (weights) {
    if (static_cast<std::size_t>(weights->size()) != n) throw DomainError("weights length must match the points");
    m.weights.assign(weights->data(), weights->data() + n);
  } else {
    m.weights.assign(n, 1.0 / static_cast<double>(n));
  }
  return m;
}

Method parse_method(const std::string& name, double eps) {
  if (name == "exact_lp") return Method::exact_lp();
  if (name == "quantile_1d") return Method::quantile_1d();
  if (name == "entropic") return Method::entropic(eps);
  if (name == "brute_force") return Method::brute_force();
  throw DomainError("unknown method: " + name);
}

py::dict table_dict(const RateTable& t) {
  py::list rows;
  for (const RateRow& r : t.rows) {
    py::dict d;
    d["t"] = r.t;
    d["mean"] = r.mean;
    d["se"] = r.se;
    d["n"] = r.n;
    d["mean_plain"] = r.mean_plain;
    d["se_plain"] = r.se_plain;
    d["failed"] = r.failed;
    d["error"] = r.error;
    rows.append(d);
  }
  py::dict out;
  out["rows"] = rows;
  out["fingerprint"] = t.fingerprint;
  out["seed"] = t.seed;
  out["route"] = t.route;
  out["bias_note"] = t.bias_note;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Subordinated diffusion convergence lab";
  py::register_exception<DomainError>(mod, "DomainError", PyExc_ValueError);

  py::class_<BernsteinFunction>(mod, "BernsteinFunction")
      .def("__call__", &BernsteinFunction::operator())
      .def_property_readonly("tag", &BernsteinFunction::tag)
      .def("__repr__", [](const BernsteinFunction& b) { return "BernsteinFunction('" + b.tag() + "')"; });
  mod.def("make_family", [](const std::string& tag, double alpha) { return make_family(tag, alpha); },
          py::arg("tag"), py::arg("alpha") = 0.5);

  mod.def(
      "validate_laplace",
      [](const BernsteinFunction& b, double lambda, double t, std::size_t n, std::uint64_t seed) {
        Stream rng(seed);
        const LaplaceCheck r = validate_laplace(b, lambda, t, n, rng);
        py::dict d;
        d["mean"] = r.mean;
        d["target"] = r.target;
        d["se"] = r.stderr_of_mean;
        d["z"] = r.z;
        d["n"] = r.n;
        return d;
      },
      py::arg("b"), py::arg("lam"), py::arg("t"), py::arg("n"), py::arg("seed") = 1);

  mod.def(
      "sample_increments",
      [](const BernsteinFunction& b, double dt, std::size_t n, std::uint64_t seed) {
        Stream rng(seed);
        std::vector<double> out(n);
        for (double& v : out) v = sample_increment(b, dt, rng);
        return py::array_t<double>(static_cast<py::ssize_t>(n), out.data());
      },
      py::arg("b"), py::arg("dt"), py::arg("n"), py::arg("seed") = 1);

  mod.def(
      "limit_sum",
      [](const std::string& model, const BernsteinFunction& b, double c, double tol) {
        const LimitSum s = limit_sum(SpectralData::from_model(build_model(parse_model_config(model))), b, c, tol);
        py::dict d;
        d["verdict"] = to_string(s.verdict);
        d["sum"] = s.verdict == SumVerdict::convergent ? py::object(py::float_(s.value)) : py::object(py::none());
        d["truncation_index"] = s.truncation_index;
        d["tail_bound"] = s.tail_bound;
        return d;
      },
      py::arg("model"), py::arg("b"), py::arg("c") = 2.0, py::arg("tol") = 1e-8);

  mod.def(
      "simulate",
      [](const std::string& model, const BernsteinFunction& b, double horizon, double obs_dt, double fine_dt,
         const std::string& initial, std::uint64_t seed) {
        const SubordinatedPath p = subordinated_path(build_model(parse_model_config(model)), b, horizon, obs_dt,
                                                     fine_dt, parse_initial_law(initial), Stream(seed));
        const auto rows = static_cast<py::ssize_t>(p.size());
        py::array_t<double> times(rows, p.obs_times.data());
        py::array_t<double> coords({rows, static_cast<py::ssize_t>(p.dim)}, p.coords.data());
        py::array_t<double> clock(rows, p.sub_path.values.data());
        return py::make_tuple(times, clock, coords);
      },
      py::arg("model"), py::arg("b"), py::arg("horizon"), py::arg("obs_dt"), py::arg("fine_dt") = 1e-3,
      py::arg("initial") = "invariant", py::arg("seed") = 1);

  mod.def(
      "transport_cost",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x,
         py::array_t<double, py::array::c_style | py::array::forcecast> y, const std::string& cost,
         const std::string& method, double period, double eps_reg,
         std::optional<py::array_t<double, py::array::c_style | py::array::forcecast>> wx,
         std::optional<py::array_t<double, py::array::c_style | py::array::forcecast>> wy) {
        CostSpec c = parse_cost(cost);
        c.period = period;
        return transport_cost(to_measure(x, wx), to_measure(y, wy), c, parse_method(method, eps_reg));
      },
      py::arg("x"), py::arg("y"), py::arg("cost") = "power(2)", py::arg("method") = "exact_lp",
      py::arg("period") = 0.0, py::arg("eps_reg") = 0.0, py::arg("wx") = py::none(), py::arg("wy") = py::none());

  mod.def(
      "theoretical_exponent",
      [](int d, double q, double alpha) {
        const TheoreticalExponent e = theoretical_exponent(d, q, alpha);
        return py::make_tuple(e.exponent, e.regime, e.log_factor);
      },
      py::arg("d"), py::arg("q"), py::arg("alpha"));

  mod.def(
      "fit_exponent",
      [](const std::vector<double>& t, const std::vector<double>& mean, const std::vector<double>& se) {
        if (t.size() != mean.size() || t.size() != se.size()) throw DomainError("columns must have equal length");
        RateTable table;
        for (std::size_t i = 0; i < t.size(); ++i) {
          RateRow r;
          r.t = t[i];
          r.mean = mean[i];
          r.se = se[i];
          table.rows.push_back(r);
        }
        const ExponentFit f = fit_exponent(table, 0.0, HUGE_VAL);
        py::dict d;
        d["slope"] = f.slope;
        d["stderr"] = f.stderr_slope;
        d["intercept"] = f.intercept;
        d["aic_power"] = f.aic_power;
        d["aic_log"] = f.aic_log;
        d["preferred"] = f.preferred;
        return d;
      },
      py::arg("t"), py::arg("mean"), py::arg("se"));

  mod.def(
      "run_experiment", [](const std::string& config_json) { return table_dict(run_experiment(parse_config(config_json))); },
      py::arg("config_json"));

  mod.def(
      "rates",
      [](const std::string& config_json) {
        const ExperimentConfig c = parse_config(config_json);
        const RatesReport r = rates_report(c);
        std::vector<VerdictLine> v = r.verdicts;
        return nlohmann::json::parse(summary_json(c, r.table, r.fit, v)).dump();
      },
      py::arg("config_json"));
}
