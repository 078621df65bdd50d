#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mixlab/cli.hpp"
#include "mixlab/error.hpp"
#include "mixlab/family.hpp"
#include "mixlab/growth.hpp"
#include "mixlab/laplace.hpp"
#include "mixlab/product.hpp"
#include "mixlab/verify.hpp"
#include "mixlab/walk.hpp"

namespace py = pybind11;
using namespace mixlab;

namespace {

py::dict trend_dict(const TrendResult& t) {
  py::dict d;
  d["verdict"] = std::string(to_string(t.verdict));
  d["slope"] = t.slope;
  d["first"] = t.first;
  d["last"] = t.last;
  d["upper_max_over_min"] = t.upper_max_over_min;
  return d;
}

std::vector<py::tuple> curve_tuples(const std::vector<CurvePoint>& pts) {
  std::vector<py::tuple> out;
  for (const auto& p : pts) out.push_back(py::make_tuple(p.time, p.tv, p.hellinger));
  return out;
}

ProductWalkSpec product_of(const std::vector<std::string>& factors, std::vector<double> weights, std::size_t cap) {
  std::vector<WalkSpec> fs;
  for (const auto& f : factors) fs.push_back(parse_walk_descriptor(f, cap));
  if (weights.empty()) weights.assign(fs.size(), 1.0);
  return make_product_walk(std::move(fs), std::move(weights));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exact mixing computations for random walks on finite groups";
  m.attr("__version__") = kVersion;

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def(
      "run",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line tool in-process; returns (exit_code, stdout, stderr).");

  m.def(
      "growth_profile",
      [](const std::string& group, const std::string& gens, std::size_t cap) {
        const auto g = parse_group(group, cap);
        const auto p = growth_profile(g, parse_generators(g, gens));
        py::dict d;
        d["order"] = p.group_order;
        d["diameter"] = p.diameter;
        d["volumes"] = p.volumes;
        return d;
      },
      py::arg("group"), py::arg("gens") = "default", py::arg("cap") = kDefaultEnumerationCap);

  m.def(
      "minimal_A",
      [](const std::string& group, const std::string& gens, double d) {
        const auto g = parse_group(group);
        return minimal_A(growth_profile(g, parse_generators(g, gens)), d);
      },
      py::arg("group"), py::arg("gens") = "default", py::arg("d") = 1.0);

  py::class_<WalkSpec>(m, "Walk")
      .def(py::init([](const std::string& desc, std::size_t cap) { return parse_walk_descriptor(desc, cap); }),
           py::arg("descriptor"), py::arg("cap") = kDefaultEnumerationCap)
      .def_property_readonly("order", [](const WalkSpec& w) { return w.group().order(); })
      .def_property_readonly("label", [](const WalkSpec& w) { return w.group().label(); })
      .def_property_readonly("symmetric", &WalkSpec::symmetric)
      .def_property_readonly("lazy", &WalkSpec::lazy)
      .def_property_readonly("step_law", [](const WalkSpec& w) { return w.step_law().probs; })
      .def("distribution", [](const WalkSpec& w, std::size_t m) { return walk_distribution(w, m).probs; },
           py::arg("m"))
      .def("heat", [](const WalkSpec& w, double t, double tol) { return heat_distribution(w, t, tol).probs; },
           py::arg("t"), py::arg("tol") = kDefaultHeatTolerance)
      .def("discrete_curve", [](const WalkSpec& w, std::size_t n) { return curve_tuples(discrete_curve(w, n)); },
           py::arg("max_steps"), "[(m, tv, hellinger)] for m = 0..max_steps")
      .def(
          "continuous_curve",
          [](const WalkSpec& w, const std::vector<double>& ts, double tol) {
            return curve_tuples(continuous_curve(w, ts, tol));
          },
          py::arg("times"), py::arg("tol") = kDefaultHeatTolerance)
      .def(
          "mixing_time",
          [](const WalkSpec& w, const std::string& metric, const std::string& clock, double eps) {
            return mixing_time(w, parse_metric(metric), parse_clock(clock), eps);
          },
          py::arg("metric") = "tv", py::arg("clock") = "discrete", py::arg("eps") = 0.25)
      .def("spectral_gap", [](const WalkSpec& w) { return spectral_gap(w); });

  m.def("tv_distance", [](const std::vector<double>& p) { return tv_distance(Distribution{p}); }, py::arg("p"));
  m.def("hellinger_distance", [](const std::vector<double>& p) { return hellinger_distance(Distribution{p}); },
        py::arg("p"));

  m.def(
      "product_hellinger",
      [](const std::vector<std::string>& factors, const std::vector<double>& weights, double t) {
        return product_hellinger_ct(product_of(factors, weights, kDefaultEnumerationCap), t);
      },
      py::arg("factors"), py::arg("weights") = std::vector<double>{}, py::arg("t"),
      "Continuous-time Hellinger distance of the product chain from its factors.");
  m.def(
      "product_flat_hellinger",
      [](const std::vector<std::string>& factors, const std::vector<double>& weights, double t) {
        return hellinger_distance(heat_distribution(build_flat(product_of(factors, weights, kDefaultEnumerationCap)), t));
      },
      py::arg("factors"), py::arg("weights") = std::vector<double>{}, py::arg("t"),
      "Same quantity from the enumerated product group.");

  m.def(
      "lambda_tau",
      [](const std::vector<double>& a, const std::vector<double>& lambda, double c) -> py::object {
        const auto r = lambda_tau(ExponentialSum(a, lambda), c);
        if (!r) return py::none();
        return py::make_tuple(r->j, r->lambda_c, r->tau_c);
      },
      py::arg("a"), py::arg("lam"), py::arg("c"), "(j, lambda_c, tau_c), or None when c >= sum(a).");
  m.def(
      "exp_sum_eval",
      [](const std::vector<double>& a, const std::vector<double>& lambda, double t) {
        return exp_sum_eval(ExponentialSum(a, lambda), t);
      },
      py::arg("a"), py::arg("lam"), py::arg("t"));
  m.def(
      "exp_sum_mixing",
      [](const std::vector<double>& a, const std::vector<double>& lambda, double eps) {
        return exp_sum_mixing(ExponentialSum(a, lambda), eps);
      },
      py::arg("a"), py::arg("lam"), py::arg("eps"));
  m.def("theorem_tn", [](const std::vector<double>& l) { return theorem_tn(l); }, py::arg("l"));
  m.def(
      "classify_trend",
      [](const std::vector<double>& n, const std::vector<double>& v) { return trend_dict(classify_trend(n, v)); },
      py::arg("n"), py::arg("values"));

  m.def(
      "experiment_heisenberg",
      [](double gamma, const std::vector<std::size_t>& n) {
        const auto ex = experiment_heisenberg(gamma, n);
        py::dict d = trend_dict(ex.report.trend);
        std::vector<double> stat;
        for (const auto& r : ex.report.rows) stat.push_back(r.statistic);
        d["statistic"] = stat;
        return d;
      },
      py::arg("gamma"), py::arg("n"));
  m.def(
      "experiment_randomized",
      [](const std::string& mode, double gamma, const std::string& dist, std::uint64_t seed, std::size_t trials,
         const std::vector<std::size_t>& n) {
        RandomizedSpec s;
        if (mode == "poly") s.mode = RandomizedMode::kPoly;
        else if (mode == "exp") s.mode = RandomizedMode::kExp;
        else fail(ErrorKind::kInvalidParameter, "mode must be poly or exp");
        s.gamma = gamma;
        s.sampler = dist;
        s.seed = seed;
        s.trials = trials;
        s.n_values = n;
        const auto ex = experiment_randomized(s);
        std::vector<std::string> verdicts;
        for (const auto& t : ex.trials) verdicts.emplace_back(to_string(t.trend.verdict));
        py::dict d;
        d["growing"] = ex.growing;
        d["bounded"] = ex.bounded;
        d["inconclusive"] = ex.inconclusive;
        d["verdicts"] = verdicts;
        return d;
      },
      py::arg("mode") = "poly", py::arg("gamma") = 2.0, py::arg("dist") = "uniform:0:2", py::arg("seed") = 42,
      py::arg("trials") = 20, py::arg("n") = std::vector<std::size_t>{});

  m.def(
      "verify_all",
      [](const std::vector<std::string>& suites, const std::vector<std::string>& fixtures, std::size_t max_step,
         std::uint64_t seed) {
        VerifyOptions o;
        o.suites = suites;
        o.fixtures = fixtures;
        o.max_step = max_step;
        o.seed = seed;
        return verify_all(o).to_json();
      },
      py::arg("suites") = std::vector<std::string>{}, py::arg("fixtures") = std::vector<std::string>{},
      py::arg("max_step") = 64, py::arg("seed") = 42, "JSON report of the check battery.");
}
