#include <fmt/format.h>

#include "lawlab/format.hpp"
#include "lawlab/lab.hpp"

namespace lawlab {

namespace {

constexpr const char* kNotSpecified = "NOT SPECIFIED";

std::string form_text(LawForm form) {
  switch (form) {
    case LawForm::chinchilla: return "chinchilla, L(N, D) = E + A/N^alpha + B/D^beta";
    case LawForm::tied: return "tied, L(N, D) = E + A/N^alpha + B/D^alpha";
    case LawForm::kaplan: return "kaplan, L(N, D) = [(N_c/N)^(alpha_n/alpha_d) + D_c/D]^alpha_d";
  }
  return {};
}

std::string num(const json& v) { return v.is_number() ? fmt::format("{:.4g}", v.get<double>()) : "n/a"; }

std::string joined(const std::vector<std::string>& parts) { return fmt::format("{}", fmt::join(parts, "; ")); }

}  // namespace

const std::vector<std::pair<std::string, std::size_t>>& checklist_sections() {
  static const std::vector<std::pair<std::string, std::size_t>> sections = {
      {"Hypothesis", 5}, {"Training setup", 8}, {"Data collection", 5}, {"Fitting algorithm", 6}};
  return sections;
}

std::string render_checklist(const ExperimentConfig& cfg, const json& report) {
  const std::string hash = config_hash(cfg);
  if (!report.contains("config_hash") || report["config_hash"] != hash)
    throw HashMismatch("report was produced from a different config (hash " +
                       report.value("config_hash", std::string("missing")) + ", config " + hash + ")");

  const json& data = report.at("data");
  const auto& names = param_names(cfg.form);

  std::vector<std::pair<std::string, std::string>> items;
  // hypothesis
  items.emplace_back("Law form", form_text(cfg.form));
  items.emplace_back("Related variables",
                     fmt::format("final loss L, parameter count N ({} convention, embeddings {}), training tokens D; "
                                 "compute C = {}*N*D for allocation",
                                 to_string(cfg.filters.n_convention),
                                 cfg.counting.embeddings_in_n ? "included" : "excluded",
                                 format_real(cfg.flop_constant)));
  items.emplace_back("Fitted parameters", fmt::format("{}", fmt::join(names, ", ")));
  items.emplace_back("Basis for the form", cfg.rationale.value_or(kNotSpecified));
  std::string assumptions = cfg.assumptions.value_or("");
  if (assumptions.empty())
    assumptions = cfg.form == LawForm::tied ? "N and D share one exponent (beta = alpha)" : kNotSpecified;
  items.emplace_back("Assumed relationships", assumptions);

  // training setup
  items.emplace_back("Models trained", fmt::format("{} runs in the fitted data", data.at("runs").get<std::size_t>()));
  items.emplace_back("Model sizes", fmt::format("{} distinct sizes, N from {} to {}", data.at("distinct_n").get<std::size_t>(),
                                                num(data["n_range"][0]), num(data["n_range"][1])));
  items.emplace_back("Training data per model",
                     fmt::format("D from {} to {} tokens; sources: {}; data repetition: {}", num(data["d_range"][0]),
                                 num(data["d_range"][1]),
                                 data["sources"].empty() ? std::string(kNotSpecified)
                                                         : fmt::format("{}", fmt::join(data["sources"].get<std::vector<std::string>>(), ", ")),
                                 kNotSpecified));
  items.emplace_back("Counting of N, D and C",
                     fmt::format("{}; flop constant {}{}", cfg.counting.describe(), format_real(cfg.flop_constant),
                                 cfg.arch_table ? "; arch table " + *cfg.arch_table : ""));
  items.emplace_back("Code for the counts", "yes, `lawlab flops` and the flop-accounting library of this tool");
  items.emplace_back("Hyperparameter choice",
                     fmt::format("learning-rate selection: {}; other hyperparameters: {}", cfg.filters.lr.describe(),
                                 kNotSpecified));
  items.emplace_back("Other architecture settings",
                     cfg.arch_table ? "per-architecture shapes in " + *cfg.arch_table : std::string(kNotSpecified));
  items.emplace_back("Training code availability", kNotSpecified);

  // data collection
  items.emplace_back("Checkpoint availability", kNotSpecified);
  const auto& ck = data.at("checkpoints_per_run");
  items.emplace_back("Checkpoints used per model",
                     fmt::format("{}; {} to {} per run", cfg.filters.checkpoints.describe(), ck[0].get<std::size_t>(),
                                 ck[1].get<std::size_t>()));
  items.emplace_back("Evaluation metric and dataset",
                     cfg.metric ? *cfg.metric : fmt::format("loss column of {}; evaluation dataset {}",
                                                            data.at("path").get<std::string>(), kNotSpecified));
  std::vector<std::string> transforms;
  if (cfg.objective.space == ResidualSpace::log) transforms.push_back("residuals taken on ln loss");
  if (cfg.isoflop_enabled) transforms.push_back("loss interpolated in (ln C, ln loss) between checkpoints");
  items.emplace_back("Transformations of the metric", transforms.empty() ? "none" : joined(transforms));
  items.emplace_back("Code for the transformations",
                     transforms.empty() ? "not applicable" : "yes, `lawlab fit` of this tool");

  // fitting algorithm
  items.emplace_back("Objective", cfg.objective.describe());
  std::string algo;
  switch (cfg.optimizer.kind) {
    case OptimizerSpec::Kind::lbfgs: algo = "L-BFGS with backtracking line search"; break;
    case OptimizerSpec::Kind::bfgs: algo = "BFGS with backtracking line search"; break;
    case OptimizerSpec::Kind::nls: algo = "Levenberg-Marquardt non-linear least squares"; break;
    case OptimizerSpec::Kind::grid: algo = "exhaustive grid search"; break;
  }
  items.emplace_back("Fitting algorithm", algo + ", multistart");
  items.emplace_back("Algorithm hyperparameters", cfg.optimizer.describe());
  const json& fit = report.at("fit");
  items.emplace_back("Initialization", fmt::format("{}; {} starts", fit.at("init").get<std::string>(),
                                                   fit.at("inits").get<std::size_t>()));
  const json& prov = data.at("provenance");
  std::vector<std::string> filters = {cfg.filters.checkpoints.describe(), cfg.filters.lr.describe()};
  if (cfg.filters.max_n) filters.push_back("max_n=" + format_real(*cfg.filters.max_n));
  if (cfg.filters.dn_min) filters.push_back("D/N>=" + format_real(*cfg.filters.dn_min));
  if (cfg.filters.dn_max) filters.push_back("D/N<=" + format_real(*cfg.filters.dn_max));
  items.emplace_back("Data points used",
                     fmt::format("{} of {} records ({}); counts after each filter: {}, {}, {}",
                                 data.at("records").get<std::size_t>(), prov.at("input").get<std::size_t>(),
                                 fmt::join(filters, ", "), prov.at("after_checkpoints").get<std::size_t>(),
                                 prov.at("after_lr").get<std::size_t>(), prov.at("after_scale").get<std::size_t>()));

  const json& val = report.at("validation");
  std::vector<std::string> checks;
  if (val["goodness_of_fit"].is_object())
    checks.push_back(fmt::format("goodness of fit r2_log={}, rmse_log={}", num(val["goodness_of_fit"]["r2_log"]),
                                 num(val["goodness_of_fit"]["rmse_log"])));
  else
    checks.push_back(std::string("goodness of fit: ") + kNotSpecified);
  if (val["holdout"].is_object())
    checks.push_back(fmt::format("extrapolation above C={}: max |log error| {}", num(val["holdout"]["split_c"]),
                                 num(val["holdout"]["max_abs_log_error"])));
  else
    checks.push_back(std::string("extrapolation: ") + kNotSpecified + " / not run");
  if (val["bootstrap"].is_object())
    checks.push_back(fmt::format("confidence intervals: percentile bootstrap, {} resamples, seed {}",
                                 val["bootstrap"]["resamples"].get<std::size_t>(),
                                 val["bootstrap"]["seed"].get<std::uint64_t>()));
  else
    checks.push_back(std::string("confidence intervals: ") + kNotSpecified + " / not run");
  items.emplace_back("Correctness checks", joined(checks));

  std::string out = "# Scaling law reproducibility checklist\n\n";
  out += "config hash: `" + hash + "`\n";
  std::size_t next = 0;
  for (const auto& [section, count] : checklist_sections()) {
    out += "\n## " + section + "\n\n";
    for (std::size_t i = 0; i < count; ++i, ++next)
      out += "- " + items.at(next).first + ": " + items.at(next).second + "\n";
  }
  return out;
}

}  // namespace lawlab
