#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kknock/features.hpp"
#include "kknock/grouplasso.hpp"
#include "kknock/io.hpp"
#include "kknock/kernels.hpp"
#include "kknock/knockoffs.hpp"
#include "kknock/selector.hpp"
#include "kknock/simbench.hpp"
#include "kknock/tuning.hpp"

namespace py = pybind11;
using namespace kknock;

namespace {

SelectorConfig config_from(const std::string& json_text, int jobs) {
  SelectorConfig c = selector_config_from_json(nlohmann::json::parse(json_text));
  c.jobs = jobs;
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "kernel knockoffs variable selection (compiled core)";
  m.attr("__version__") = kVersion;
  m.attr("SCHEMA_VERSION") = kSchemaVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const nlohmann::json::exception& e) {
      py::set_error(PyExc_ValueError, e.what());
    }
  });

  py::class_<SelectionResult>(m, "SelectionResult")
      .def_property_readonly("selected", [](const SelectionResult& r) { return r.selected; })
      .def_property_readonly("delta", [](const SelectionResult& r) { return r.delta; })
      .def_property_readonly("pi_hat", [](const SelectionResult& r) { return r.freq.pi_hat(); })
      .def_property_readonly("threshold", [](const SelectionResult& r) { return r.threshold; })
      .def_property_readonly("q", [](const SelectionResult& r) { return r.q; })
      .def_property_readonly("chosen_r",
                             [](const SelectionResult& r) { return r.diagnostics.chosen_r; })
      .def_property_readonly("chosen_tau",
                             [](const SelectionResult& r) { return r.diagnostics.chosen_tau; })
      .def_property_readonly("converged_frac",
                             [](const SelectionResult& r) { return r.diagnostics.converged_frac; })
      .def("predict", [](const SelectionResult& r, const Matrix& X) {
        return r.refit.predict(X);
      }, py::arg("X"))
      .def("__repr__", [](const SelectionResult& r) {
        return "<SelectionResult selected=" + std::to_string(r.selected.size()) + " of " +
               std::to_string(r.delta.size()) + ">";
      });

  m.def("_select", [](const Matrix& X, const Vector& y, const std::string& cfg, int jobs,
                      bool timing) {
    const SelectorConfig config = config_from(cfg, jobs);
    SelectionResult res;
    {
      py::gil_scoped_release release;
      res = run(X, y, config);
    }
    std::string doc = result_to_json(res, config, timing).dump(2);
    return py::make_tuple(std::move(res), std::move(doc));
  });

  m.def("_tune", [](const Matrix& X, const Vector& y, const std::string& cfg, int jobs) {
    const SelectorConfig config = config_from(cfg, jobs);
    TuneReport report;
    {
      py::gil_scoped_release release;
      report = tune(augmented_predictors(X, config), y, config);
    }
    return tune_report_to_json(report).dump();
  });

  m.def("_simulate", [](const std::string& cfg, std::uint64_t rep) {
    const SimConfig config = sim_config_from_json(nlohmann::json::parse(cfg));
    config.validate();
    SimDataset ds = simulate(config, rep);
    return py::make_tuple(ds.X, ds.y, ds.support, ds.coefficients);
  });

  m.def("_bench", [](const std::string& manifest, int jobs, bool timing) {
    const auto cells = parse_manifest(nlohmann::json::parse(manifest));
    std::vector<CellResult> results;
    {
      py::gil_scoped_release release;
      results = run_experiment(cells, jobs);
    }
    std::ostringstream out;
    write_results_csv(out, results, timing);
    return out.str();
  });

  m.def("kernel", [](const std::string& family, double scale, double x, double xp) {
    return kernel_eval(make_kernel(parse_kernel_family(family), scale), x, xp);
  }, py::arg("family"), py::arg("scale"), py::arg("x"), py::arg("x_prime"));

  m.def("random_features", [](const Vector& x, Index r, const std::string& family, double scale,
                              std::uint64_t seed) {
    RngStream rng(seed);
    const FeatureMap map = draw_feature_map(1, r, make_kernel(parse_kernel_family(family), scale), rng);
    Matrix out(x.size(), r);
    for (Index i = 0; i < x.size(); ++i) out.row(i) = featurize(map, 0, x(i)).transpose();
    return out;
  }, py::arg("x"), py::arg("r"), py::arg("family") = "laplacian", py::arg("scale") = 1.0,
     py::arg("seed") = 0);

  m.def("knockoffs", [](const Matrix& X, std::uint64_t seed, std::optional<double> ridge) {
    const KnockoffModel model = fit_gaussian_model(X, ridge);
    RngStream rng(seed);
    return sample_knockoffs(model, X, rng);
  }, py::arg("X"), py::arg("seed") = 0, py::arg("ridge") = py::none());

  m.def("knockoff_threshold", [](const std::vector<double>& delta, double q, bool plus) {
    return knockoff_threshold(delta, q, plus ? FilterKind::KnockoffsPlus : FilterKind::Knockoffs);
  }, py::arg("delta"), py::arg("q"), py::arg("plus") = false);

  m.def("group_lasso", [](const Matrix& Phi, const Vector& y, Index group_size, double tau,
                          int max_iter, double tol, double rel_tol) {
    SolverOptions opts;
    opts.max_iter = max_iter;
    opts.tol = tol;
    opts.rel_tol = rel_tol;
    const GroupLassoFit fit = solve(GroupLassoProblem{Phi, y, group_size, tau}, opts);
    py::dict d;
    d["coef"] = fit.coef;
    d["active"] = fit.active;
    d["converged"] = fit.converged;
    d["kkt_residual"] = fit.kkt_residual;
    d["iterations"] = fit.iterations;
    d["objective_trace"] = fit.objective_trace;
    return d;
  }, py::arg("design"), py::arg("y"), py::arg("group_size"), py::arg("tau"),
     py::arg("max_iter") = 5000, py::arg("tol") = 1e-6, py::arg("rel_tol") = 1e-8);

  m.def("choose_r", [](const std::vector<Index>& xi, const std::vector<double>& sigma, Index p) {
    return choose_r(xi, sigma, p);
  }, py::arg("candidates"), py::arg("sigma"), py::arg("p"));

  m.def("metrics", [](const std::vector<Index>& selected, const std::vector<Index>& support,
                      double q) {
    const MetricRecord rec = metrics(selected, support, q);
    py::dict d;
    d["fdp"] = rec.fdp;
    d["power"] = rec.power_frac;
    d["selected"] = rec.selected_size;
    d["mfdr_term"] = rec.mfdr_term;
    return d;
  }, py::arg("selected"), py::arg("support"), py::arg("q"));
}
