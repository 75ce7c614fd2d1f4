#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <regex>
#include <functional>
#include <map>
#include <set>

#include <fmt/format.h>

#include "lawlab/format.hpp"
#include "lawlab/isoflop.hpp"
#include "lawlab/lab.hpp"
#include "lawlab/validation.hpp"

namespace lawlab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  std::filesystem::path p(path);
  if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
  return p.string();
}

template <class Fn>
auto in_section(const std::string& path, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const SectionError&) {
    throw;
  } catch (const Error& e) {
    throw SectionError(path, e);
  }
}

std::string fit_section_for(const Error& e) {
  const std::string& c = e.code();
  if (c == "ObjectiveMismatch") return "optimizer.kind";
  if (c == "ConfigError" || c == "NonFinite" || c == "EmptyInit") return "init";
  if (c == "DomainError") return "data";
  return "optimizer";
}

json params_object(LawForm form, const Vector& theta) {
  json out = json::object();
  const auto& names = param_names(form);
  for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = theta[static_cast<Eigen::Index>(i)];
  return out;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

double allocation_exponent(LawForm form, const Vector& t) {
  switch (form) {
    case LawForm::chinchilla: return t[4] / (t[3] + t[4]);
    case LawForm::tied: return 0.5;
    case LawForm::kaplan: return t[3] / (t[2] + t[3]);
  }
  return std::nan("");
}

json allocation_entry(const ReferencePoint& r, const std::function<Allocation(double)>& rule) {
  json e = {{"label", r.label}, {"c", r.c}, {"reference_n", r.n ? json(*r.n) : json(nullptr)},
            {"reference_d", r.d ? json(*r.d) : json(nullptr)}};
  try {
    const Allocation a = rule(r.c);
    e["n_opt"] = a.n;
    e["d_opt"] = a.d;
    e["rho"] = a.rho;
  } catch (const Error& err) {
    e["n_opt"] = e["d_opt"] = e["rho"] = nullptr;
    e["error"] = err.code() + ": " + err.what();
  }
  return e;
}

json data_block(const std::string& path, const ExperimentConfig& cfg, const ComputeAnnotatedDataset& ds,
                const FilterProvenance& prov) {
  std::set<std::string> runs, sources;
  std::set<double> sizes;
  std::map<std::string, std::size_t> per_run;
  double nmin = INFINITY, nmax = 0, dmin = INFINITY, dmax = 0, cmin = INFINITY, cmax = 0;
  for (const auto& r : ds.records) {
    runs.insert(r.record.run_id);
    sources.insert(r.record.source);
    sizes.insert(r.n);
    ++per_run[r.record.run_id];
    nmin = std::min(nmin, r.n);
    nmax = std::max(nmax, r.n);
    dmin = std::min(dmin, r.d);
    dmax = std::max(dmax, r.d);
    cmin = std::min(cmin, r.c);
    cmax = std::max(cmax, r.c);
  }
  std::size_t ck_min = SIZE_MAX, ck_max = 0;
  for (const auto& [_, k] : per_run) {
    ck_min = std::min(ck_min, k);
    ck_max = std::max(ck_max, k);
  }
  return {{"path", path},
          {"format", cfg.data_format == DataFormat::csv ? "csv" : "json"},
          {"label", ds.label},
          {"provenance",
           {{"input", prov.input},
            {"after_checkpoints", prov.after_checkpoints},
            {"after_lr", prov.after_lr},
            {"after_scale", prov.after_scale},
            {"missing_total_steps", prov.missing_total_steps}}},
          {"records", ds.size()},
          {"runs", runs.size()},
          {"distinct_n", sizes.size()},
          {"sources", std::vector<std::string>(sources.begin(), sources.end())},
          {"checkpoints_per_run", {ck_min, ck_max}},
          {"n_range", {nmin, nmax}},
          {"d_range", {dmin, dmax}},
          {"c_range", {cmin, cmax}}};
}

json result_json(const FitResult& r) {
  return {{"init_index", r.init_index},
          {"objective", r.objective},
          {"init_objective", r.init_objective},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"termination_reason", r.termination_reason}};
}

json residual_json(const GoodnessOfFit& g) {
  return {{"r2_log", g.r2_log},
          {"rmse_log", g.rmse_log},
          {"records", g.records},
          {"residuals",
           {{"min", g.residuals.min},
            {"median", g.residuals.median},
            {"max", g.residuals.max},
            {"worst_id", g.residuals.worst_id},
            {"worst", g.residuals.worst}}}};
}

std::vector<std::string> artifact_notes(const ExperimentConfig& cfg) {
  std::vector<std::string> notes;
  if (cfg.init_kind != InitStrategy::Kind::fixed || cfg.optimizer.kind == OptimizerSpec::Kind::grid) {
    if (!cfg.init_grid)
      notes.push_back(
          "init grid: default ranges chosen by this tool; 6-point axes are log_a and log_b, the rest have 5");
    else
      notes.push_back("init grid: ranges and counts from the config");
  }
  if (cfg.form == LawForm::kaplan)
    notes.push_back(
        "kaplan form: evaluated as ((n_c/n)^(alpha_n/alpha_d) + d_c/d)^alpha_d, which decreases in n and d; the "
        "variant with n/n_c and d/d_c inside the bracket increases in both and is not used");
  notes.push_back(
      "best fit: lowest objective among converged multistart results (all results if none converged), ties to the "
      "lower init index");
  notes.push_back(
      "convergence: stop when the parameter step max-norm and the objective decrease both fall below tol; a line "
      "search that finds no decrease for steps above tol/1000 also counts as converged");
  if (cfg.counting.flop_method == FlopMethod::detailed)
    notes.push_back(
        "compute: detailed counting charges the backward pass at twice the forward pass; norm gains and biases are "
        "not counted");
  if (cfg.isoflop_enabled)
    notes.push_back(
        "isoflop: losses interpolated linearly in (ln c, ln loss) inside each run's compute range only; unweighted "
        "least-squares parabola in ln n; budgets whose vertex falls outside the sampled sizes are dropped");
  if (cfg.split_c)
    notes.push_back("holdout: final checkpoints (step == total_steps) with compute above split_c");
  return notes;
}

}  // namespace

json error_object(const std::exception& e) {
  json err;
  err["message"] = e.what();
  err["path"] = nullptr;
  if (const auto* le = dynamic_cast<const Error*>(&e)) {
    err["code"] = le->code();
    if (const auto* se = dynamic_cast<const SectionError*>(&e)) {
      err["path"] = se->path();
    } else {
      static const std::regex key(R"(^((hypothesis|data|counting|objective|optimizer|init|isoflop|validation|report)([.\[][A-Za-z0-9_.\[\]]*)?)[: ])");
      std::smatch m;
      const std::string msg = e.what();
      if (std::regex_search(msg, m, key)) err["path"] = m[1].str();
    }
  } else {
    err["code"] = "InternalError";
  }
  return {{"error", err}};
}

json run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  const auto t0 = Clock::now();
  cfg.validate();

  const std::string data_path = options.data_path ? *options.data_path : cfg.data_path;
  if (data_path.empty()) throw SectionError("data.path", ConfigError("no data file given (set data.path or --data)"));
  const std::string data_file = options.data_path ? *options.data_path : resolve(data_path, options.base_dir);

  const Dataset raw = in_section("data.path", [&] { return ingest_file(data_file, cfg.data_format); });
  FilterProvenance prov;
  const Dataset filtered = in_section("data.filters", [&] { return apply_filters(raw, cfg.filters, &prov); });
  if (filtered.empty())
    throw SectionError("data.filters", DomainError("no records left after filtering"));

  ArchTable arch;
  std::optional<std::string> arch_path = options.arch_table;
  if (!arch_path && cfg.arch_table) arch_path = resolve(*cfg.arch_table, options.base_dir);
  if (arch_path) arch = in_section("counting.arch_table", [&] { return load_arch_table(*arch_path); });
  const ComputeAnnotatedDataset ds = in_section("counting", [&] { return annotate_compute(filtered, cfg.counting, arch); });

  const FitProblem problem = in_section("data", [&] { return FitProblem::from_dataset(ds, cfg.form, cfg.objective); });
  const InitStrategy init = in_section("init", [&] { return build_init(cfg, options.base_dir); });

  const auto t_fit = Clock::now();
  MultistartReport fitted;
  try {
    fitted = fit(problem, init, cfg.optimizer, options.threads);
  } catch (const Error& e) {
    throw SectionError(fit_section_for(e), e);
  }
  const double fit_seconds = seconds_since(t_fit);
  const FitResult& best = fitted.best();

  json report;
  report["schema_version"] = kReportSchemaVersion;
  report["config"] = to_json(cfg);
  report["config_hash"] = config_hash(cfg);
  report["data"] = data_block(data_path, cfg, ds, prov);
  report["counting"] = {{"policy", cfg.counting.describe()}, {"flop_constant", cfg.flop_constant}};

  std::size_t converged = 0;
  json results = json::array();
  for (const auto& r : fitted.results) {
    converged += r.converged ? 1 : 0;
    results.push_back(result_json(r));
  }
  report["fit"] = {{"form", to_string(cfg.form)},
                   {"objective", cfg.objective.describe()},
                   {"optimizer", cfg.optimizer.describe()},
                   {"init", init.describe()},
                   {"inits", fitted.results.size()},
                   {"converged", converged},
                   {"best_index", fitted.best_index},
                   {"results", results}};

  json best_json = result_json(best);
  best_json["form"] = to_string(cfg.form);
  best_json["params"] = params_object(cfg.form, best.params);
  best_json["vector"] = vector_json(best.params);
  best_json["allocation_exponent"] = allocation_exponent(cfg.form, best.params);
  if (cfg.form == LawForm::chinchilla || cfg.form == LawForm::tied)
    best_json["coefficients"] = {{"E", std::exp(best.params[0])},
                                 {"A", std::exp(best.params[1])},
                                 {"B", std::exp(best.params[2])}};
  report["best"] = best_json;

  json alloc = json::array();
  for (const auto& r : cfg.reference_points)
    alloc.push_back(allocation_entry(r, [&](double c) { return allocate(cfg.form, best.params, c, cfg.flop_constant); }));
  report["allocation"] = alloc;

  if (cfg.isoflop_enabled) {
    const IsoflopAnalysis iso = in_section("isoflop", [&] { return run_isoflop(ds, cfg.budgets); });
    const auto bins = build_isoflop_bins(ds, cfg.budgets);
    json budgets = json::array();
    for (std::size_t i = 0; i < iso.budgets.size(); ++i) {
      const auto& b = iso.budgets[i];
      json runs = json::array();
      for (const auto& p : bins[i].points) runs.push_back(p.run_id);
      json entry = {{"c", b.c}, {"points", b.points}, {"run_ids", runs}};
      if (b.profile) {
        entry["n_star"] = b.profile->n_star;
        entry["loss_star"] = b.profile->loss_star;
        entry["dropped"] = nullptr;
      } else {
        entry["n_star"] = entry["loss_star"] = nullptr;
        entry["dropped"] = b.dropped_reason;
      }
      budgets.push_back(entry);
    }
    json iso_json = {{"budgets", budgets}};
    if (iso.ratio) {
      iso_json["ratio"] = {{"log_n0", iso.ratio->params.log_n0},
                           {"exp_a", iso.ratio->params.exp_a},
                           {"se_log_n0", iso.ratio->se_log_n0},
                           {"se_exp_a", iso.ratio->se_exp_a},
                           {"budgets_used", iso.ratio->samples}};
      json ialloc = json::array();
      for (const auto& r : cfg.reference_points)
        ialloc.push_back(
            allocation_entry(r, [&](double c) { return ratio_predict(iso.ratio->params, c, cfg.flop_constant); }));
      iso_json["allocation"] = ialloc;
    } else {
      iso_json["ratio"] = nullptr;
      iso_json["ratio_error"] = iso.ratio_error;
    }
    report["isoflop"] = iso_json;
  } else {
    report["isoflop"] = nullptr;
  }

  json validation;
  validation["goodness_of_fit"] = problem.size() >= 2 ? residual_json(goodness_of_fit(problem, best.params)) : json(nullptr);
  if (cfg.split_c) {
    FitSettings settings{cfg.form, cfg.objective, init, cfg.optimizer};
    const HoldoutReport h = in_section("validation.split_c", [&] {
      return validate_extrapolation(ds, *cfg.split_c, settings, options.threads);
    });
    json rows = json::array();
    for (const auto& r : h.holdout)
      rows.push_back({{"id", r.id}, {"n", r.n}, {"d", r.d}, {"c", r.c}, {"observed", r.observed},
                      {"predicted", r.predicted}, {"abs_log_error", r.abs_log_error}});
    validation["holdout"] = {{"split_c", h.split_c},
                             {"train_records", h.train_records},
                             {"params", params_object(cfg.form, h.params)},
                             {"train_objective", h.train_objective},
                             {"rows", rows},
                             {"max_abs_log_error", h.max_abs_log_error},
                             {"mean_abs_log_error", h.mean_abs_log_error}};
  } else {
    validation["holdout"] = nullptr;
  }
  if (cfg.bootstrap) {
    const BootstrapReport b = in_section("validation.bootstrap", [&] {
      return bootstrap_fit(problem, init, cfg.optimizer, cfg.bootstrap->b, cfg.bootstrap->seed, options.threads);
    });
    json intervals = json::object();
    const auto& names = param_names(cfg.form);
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      intervals[names[i]] = {{"point", b.point[k]}, {"lower", b.lower[k]}, {"upper", b.upper[k]}};
    }
    validation["bootstrap"] = {{"resamples", b.resamples}, {"seed", b.seed}, {"redraws", b.redraws},
                               {"percentiles", {2.5, 97.5}}, {"intervals", intervals}};
  } else {
    validation["bootstrap"] = nullptr;
  }
  report["validation"] = validation;
  report["notes"] = artifact_notes(cfg);
  report["timing"] = {{"fit_seconds", fit_seconds}, {"total_seconds", seconds_since(t0)}, {"threads", options.threads}};
  return report;
}

json without_timing(json report) {
  report.erase("timing");
  return report;
}

std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

}  // namespace lawlab
