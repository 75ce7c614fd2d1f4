// Python bindings. Structured values cross the boundary as JSON text and are
// decoded by the thin wrapper in lawlab/__init__.py.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lawlab/config.hpp"
#include "lawlab/error.hpp"
#include "lawlab/fitters.hpp"
#include "lawlab/flops.hpp"
#include "lawlab/lab.hpp"
#include "lawlab/law_forms.hpp"
#include "lawlab/objectives.hpp"
#include "lawlab/run_ledger.hpp"

namespace py = pybind11;
using namespace lawlab;

namespace {

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::vector<double> from_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

RunOptions options(const std::string& base_dir, const std::optional<std::string>& data,
                   const std::optional<std::string>& arch_table, unsigned threads) {
  RunOptions o;
  o.base_dir = base_dir;
  o.data_path = data;
  o.arch_table = arch_table;
  o.threads = threads;
  return o;
}

std::string run(const std::string& config_json, const std::string& base_dir, const std::optional<std::string>& data,
                const std::optional<std::string>& arch_table, unsigned threads) {
  const ExperimentConfig cfg = parse_config(json::parse(config_json));
  return dump_report(run_experiment(cfg, options(base_dir, data, arch_table, threads)));
}

py::dict fit_observations(const std::vector<double>& n, const std::vector<double>& d, const std::vector<double>& loss,
                          const std::string& form, const std::string& objective, double delta,
                          const std::string& optimizer, std::size_t top_k, double tol, unsigned threads) {
  if (n.size() != d.size() || n.size() != loss.size()) throw DomainError("n, d and loss must have equal length");
  std::vector<Observation> obs;
  for (std::size_t i = 0; i < n.size(); ++i) obs.push_back({n[i], d[i], loss[i], std::to_string(i)});
  ObjectiveSpec spec;
  spec.kind = parse_objective_kind(objective);
  spec.delta = spec.has_delta() ? delta : 0.0;
  spec.validate();
  OptimizerSpec opt;
  opt.kind = parse_optimizer_kind(optimizer);
  opt.tol = tol;
  if (opt.kind == OptimizerSpec::Kind::nls && spec.kind != ObjectiveSpec::Kind::mse)
    throw ObjectiveMismatch("nls needs the mse objective");
  const LawForm f = parse_law_form(form);
  const FitProblem problem(std::move(obs), f, spec);
  const MultistartReport rep = fit(problem, InitStrategy::top_k(GridSpec::default_for(f), top_k), opt, threads);
  const FitResult& best = rep.best();
  py::dict params;
  const auto& names = param_names(f);
  for (std::size_t i = 0; i < names.size(); ++i) params[py::str(names[i])] = best.params[static_cast<Eigen::Index>(i)];
  py::dict out;
  out["form"] = form;
  out["params"] = params;
  out["vector"] = from_vector(best.params);
  out["objective"] = best.objective;
  out["converged"] = best.converged;
  out["termination_reason"] = best.termination_reason;
  out["inits"] = rep.results.size();
  return out;
}

}  // namespace

PYBIND11_MODULE(_lawlab, m) {
  m.doc() = "Scaling-law fitting core";

  static py::exception<Error> error(m, "LawlabError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      error((e.code() + ": " + e.what()).c_str());
    }
  });

  m.attr("REPORT_SCHEMA_VERSION") = kReportSchemaVersion;

  m.def("normalize_config", [](const std::string& text) { return serialize_config(parse_config(json::parse(text))); },
        "Parse and re-serialize a config, filling defaults.");
  m.def("config_hash", [](const std::string& text) { return config_hash(parse_config(json::parse(text))); });
  m.def("run_experiment", &run, py::arg("config_json"), py::arg("base_dir") = "", py::arg("data") = py::none(),
        py::arg("arch_table") = py::none(), py::arg("threads") = 1u);
  m.def(
      "run_matrix",
      [](const std::string& matrix_json, const std::string& matrix_dir, const std::string& out_dir, unsigned threads) {
        const MatrixOutcome o = run_matrix(json::parse(matrix_json), matrix_dir, out_dir, options("", {}, {}, threads));
        return py::make_tuple(o.variants, o.failures, o.comparison_csv);
      },
      py::arg("matrix_json"), py::arg("matrix_dir"), py::arg("out_dir"), py::arg("threads") = 1u);
  m.def(
      "render_checklist",
      [](const std::string& config_json, const std::string& report_json) {
        return render_checklist(parse_config(json::parse(config_json)), json::parse(report_json));
      },
      py::arg("config_json"), py::arg("report_json"));
  m.def(
      "render_plot",
      [](const std::vector<std::pair<std::string, std::string>>& series, const std::string& axes,
         std::optional<std::pair<double, double>> c_range) {
        std::vector<PlotSeries> s;
        for (const auto& [label, report] : series) s.push_back({label, json::parse(report)});
        return render_plot(s, parse_plot_axes(axes), c_range);
      },
      py::arg("series"), py::arg("axes") = "c_vs_n", py::arg("c_range") = py::none());

  m.def("fit_observations", &fit_observations, py::arg("n"), py::arg("d"), py::arg("loss"),
        py::arg("form") = "chinchilla", py::arg("objective") = "log_huber", py::arg("delta") = 1e-3,
        py::arg("optimizer") = "lbfgs", py::arg("top_k") = 100, py::arg("tol") = 1e-6, py::arg("threads") = 1u);
  m.def(
      "predict_loss",
      [](const std::string& form, const std::vector<double>& theta, double n, double d) {
        return predict_loss(parse_law_form(form), to_vector(theta), n, d);
      },
      py::arg("form"), py::arg("theta"), py::arg("n"), py::arg("d"));
  m.def(
      "optimal_allocation",
      [](const std::string& form, const std::vector<double>& theta, double c, double flop_constant) {
        const Allocation a = allocate(parse_law_form(form), to_vector(theta), c, flop_constant);
        return py::make_tuple(a.n, a.d, a.rho);
      },
      py::arg("form"), py::arg("theta"), py::arg("c"), py::arg("flop_constant") = 6.0);
  m.def("param_names", [](const std::string& form) { return param_names(parse_law_form(form)); });

  m.def("six_nd", &six_nd, py::arg("n"), py::arg("d"));
  m.def(
      "count_params",
      [](const std::string& arch_table_json, const std::string& arch_id, bool include_embeddings) {
        return count_params(lookup_arch(parse_arch_table(arch_table_json), arch_id), include_embeddings);
      },
      py::arg("arch_table_json"), py::arg("arch_id"), py::arg("include_embeddings") = true);
  m.def(
      "flops_per_token",
      [](const std::string& arch_table_json, const std::string& arch_id, bool include_embeddings) {
        return flops_per_token(lookup_arch(parse_arch_table(arch_table_json), arch_id), include_embeddings);
      },
      py::arg("arch_table_json"), py::arg("arch_id"), py::arg("include_embeddings") = true);
  m.def(
      "ingest_csv",
      [](const std::string& path) {
        const Dataset ds = ingest_file(path, DataFormat::csv);
        return to_csv(ds);
      },
      py::arg("path"), "Ingest and re-emit a ledger CSV in canonical form.");
}
