#include "lawlab/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "lawlab/error.hpp"

namespace lawlab {

namespace {

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.count(key)) throw ConfigError((path.empty() ? key : path + "." + key) + ": unknown key");
}

std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

std::optional<std::string> opt_string(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v) return std::nullopt;
  if (!v->is_string()) throw ConfigError(join(path, key) + ": expected a string");
  return v->get<std::string>();
}

std::optional<double> opt_real(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v) return std::nullopt;
  if (!v->is_number()) throw ConfigError(join(path, key) + ": expected a number");
  return v->get<double>();
}

std::optional<std::uint64_t> opt_count(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v) return std::nullopt;
  if (v->is_number_unsigned()) return v->get<std::uint64_t>();
  if (v->is_number_integer() && v->get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v->get<std::int64_t>());
  throw ConfigError(join(path, key) + ": expected a non-negative integer");
}

std::optional<bool> opt_bool(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v) return std::nullopt;
  if (!v->is_boolean()) throw ConfigError(join(path, key) + ": expected true or false");
  return v->get<bool>();
}

// Runs an enum parser and re-labels its error with the key path.
template <class Parse>
auto parse_named(const json& obj, const std::string& path, const char* key, Parse parse)
    -> std::optional<decltype(parse(std::string_view{}))> {
  auto text = opt_string(obj, path, key);
  if (!text) return std::nullopt;
  try {
    return parse(*text);
  } catch (const Error&) {
    throw ConfigError(join(path, key) + ": unknown value '" + *text + "'");
  }
}

json opt_json(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }
json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void parse_hypothesis(const json& j, ExperimentConfig& cfg) {
  const std::string p = "hypothesis";
  check_keys(j, p, {"form", "rationale", "assumptions"});
  if (auto f = parse_named(j, p, "form", parse_law_form)) cfg.form = *f;
  cfg.rationale = opt_string(j, p, "rationale");
  cfg.assumptions = opt_string(j, p, "assumptions");
}

void parse_filters(const json& j, FilterSpec& f) {
  const std::string p = "data.filters";
  check_keys(j, p, {"checkpoint_policy", "min_fraction", "lr_policy", "lr", "max_n", "dn_min", "dn_max",
                    "n_convention"});
  auto cp = opt_string(j, p, "checkpoint_policy").value_or("final_only");
  auto frac = opt_real(j, p, "min_fraction");
  if (cp == "final_only") {
    f.checkpoints = CheckpointPolicy::final_only();
  } else if (cp == "all") {
    f.checkpoints = CheckpointPolicy::all();
  } else if (cp == "min_fraction") {
    if (!frac) throw ConfigError("data.filters.min_fraction: required by checkpoint_policy min_fraction");
    f.checkpoints = CheckpointPolicy::min_fraction(*frac);
  } else {
    throw ConfigError("data.filters.checkpoint_policy: unknown value '" + cp + "'");
  }
  if (frac && cp != "min_fraction")
    throw ConfigError("data.filters.min_fraction: only meaningful with checkpoint_policy min_fraction");

  auto lp = opt_string(j, p, "lr_policy").value_or("all");
  std::optional<std::string> lr;
  if (const json* v = find(j, "lr")) {
    if (v->is_string())
      lr = v->get<std::string>();
    else if (v->is_number())
      lr = v->dump();
    else
      throw ConfigError("data.filters.lr: expected a decimal string");
  }
  if (lp == "all") {
    f.lr = LrPolicy::all();
  } else if (lp == "sweep_optimal") {
    f.lr = LrPolicy::sweep_optimal();
  } else if (lp == "fixed") {
    if (!lr) throw ConfigError("data.filters.lr: required by lr_policy fixed");
    try {
      f.lr = LrPolicy::fixed(*lr);
    } catch (const Error&) {
      throw ConfigError("data.filters.lr: not a decimal number '" + *lr + "'");
    }
  } else {
    throw ConfigError("data.filters.lr_policy: unknown value '" + lp + "'");
  }
  if (lr && lp != "fixed") throw ConfigError("data.filters.lr: only meaningful with lr_policy fixed");

  f.max_n = opt_real(j, p, "max_n");
  f.dn_min = opt_real(j, p, "dn_min");
  f.dn_max = opt_real(j, p, "dn_max");
  if (auto c = parse_named(j, p, "n_convention", parse_n_convention)) f.n_convention = *c;
}

void parse_data(const json& j, ExperimentConfig& cfg) {
  const std::string p = "data";
  check_keys(j, p, {"path", "format", "filters", "metric"});
  cfg.data_path = opt_string(j, p, "path").value_or("");
  if (auto f = parse_named(j, p, "format", parse_data_format)) cfg.data_format = *f;
  cfg.metric = opt_string(j, p, "metric");
  if (const json* f = find(j, "filters")) parse_filters(*f, cfg.filters);
}

void parse_counting(const json& j, ExperimentConfig& cfg) {
  const std::string p = "counting";
  check_keys(j, p, {"embeddings_in_n", "embeddings_in_c", "flop_method", "arch_table", "flop_constant"});
  if (auto v = opt_bool(j, p, "embeddings_in_n")) cfg.counting.embeddings_in_n = *v;
  if (auto v = opt_bool(j, p, "embeddings_in_c")) cfg.counting.embeddings_in_c = *v;
  if (auto v = parse_named(j, p, "flop_method", parse_flop_method)) cfg.counting.flop_method = *v;
  cfg.arch_table = opt_string(j, p, "arch_table");
  if (auto v = opt_real(j, p, "flop_constant")) cfg.flop_constant = *v;
}

void parse_objective(const json& j, ExperimentConfig& cfg) {
  const std::string p = "objective";
  check_keys(j, p, {"kind", "delta", "space"});
  auto kind = parse_named(j, p, "kind", parse_objective_kind).value_or(ObjectiveSpec::Kind::log_huber);
  auto space = parse_named(j, p, "space", parse_residual_space);
  auto delta = opt_real(j, p, "delta");
  switch (kind) {
    case ObjectiveSpec::Kind::log_huber: cfg.objective = ObjectiveSpec::log_huber(delta.value_or(1e-3)); break;
    case ObjectiveSpec::Kind::huber:
      cfg.objective = ObjectiveSpec::huber(delta.value_or(1e-3), space.value_or(ResidualSpace::linear));
      break;
    case ObjectiveSpec::Kind::mse: cfg.objective = ObjectiveSpec::mse(space.value_or(ResidualSpace::linear)); break;
    case ObjectiveSpec::Kind::mae: cfg.objective = ObjectiveSpec::mae(space.value_or(ResidualSpace::linear)); break;
  }
  if (kind == ObjectiveSpec::Kind::log_huber && space) cfg.objective.space = *space;
  if (delta && !cfg.objective.has_delta()) throw ConfigError("objective.delta: only meaningful for huber objectives");
}

void parse_optimizer(const json& j, ExperimentConfig& cfg) {
  const std::string p = "optimizer";
  check_keys(j, p, {"kind", "memory", "tol", "max_iter", "grad_mode", "fd_step", "density_multiplier"});
  auto& o = cfg.optimizer;
  if (auto v = parse_named(j, p, "kind", parse_optimizer_kind)) o.kind = *v;
  if (auto v = opt_count(j, p, "memory")) o.memory = *v;
  if (auto v = opt_real(j, p, "tol")) o.tol = *v;
  if (auto v = opt_count(j, p, "max_iter")) o.max_iter = *v;
  if (auto v = opt_string(j, p, "grad_mode")) {
    if (*v == "analytic")
      o.grad_mode = OptimizerSpec::GradMode::analytic;
    else if (*v == "finite_diff")
      o.grad_mode = OptimizerSpec::GradMode::finite_diff;
    else
      throw ConfigError("optimizer.grad_mode: unknown value '" + *v + "'");
  }
  if (auto v = opt_real(j, p, "fd_step")) o.fd_step = *v;
  if (auto v = opt_count(j, p, "density_multiplier")) o.density_multiplier = *v;
}

GridSpec parse_grid(const json& j) {
  if (!j.is_array()) throw ConfigError("init.grid: expected a list of axes");
  GridSpec g;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = fmt::format("init.grid[{}]", i);
    check_keys(j[i], p, {"param", "lo", "hi", "count"});
    GridAxis a;
    auto param = opt_string(j[i], p, "param");
    auto lo = opt_real(j[i], p, "lo");
    auto hi = opt_real(j[i], p, "hi");
    auto count = opt_count(j[i], p, "count");
    if (!param || !lo || !hi || !count) throw ConfigError(p + ": needs param, lo, hi and count");
    a.param = *param;
    a.lo = *lo;
    a.hi = *hi;
    a.count = *count;
    g.axes.push_back(a);
  }
  return g;
}

void parse_init(const json& j, ExperimentConfig& cfg) {
  const std::string p = "init";
  check_keys(j, p, {"strategy", "k", "seed", "grid", "preset_file", "preset", "params"});
  if (auto v = parse_named(j, p, "strategy", parse_init_kind)) cfg.init_kind = *v;
  if (auto v = opt_count(j, p, "k")) cfg.init_k = *v;
  if (auto v = opt_count(j, p, "seed")) cfg.init_seed = *v;
  if (const json* g = find(j, "grid")) cfg.init_grid = parse_grid(*g);
  cfg.preset_file = opt_string(j, p, "preset_file");
  cfg.preset = opt_string(j, p, "preset");
  if (const json* v = find(j, "params")) {
    if (!v->is_array()) throw ConfigError("init.params: expected a list of numbers");
    std::vector<double> params;
    for (const auto& x : *v) {
      if (!x.is_number()) throw ConfigError("init.params: expected a list of numbers");
      params.push_back(x.get<double>());
    }
    cfg.init_params = std::move(params);
  }
}

void parse_isoflop(const json& j, ExperimentConfig& cfg) {
  const std::string p = "isoflop";
  check_keys(j, p, {"enabled", "budgets"});
  if (auto v = opt_bool(j, p, "enabled")) cfg.isoflop_enabled = *v;
  if (const json* b = find(j, "budgets")) {
    if (b->is_array()) {
      std::vector<double> list;
      for (const auto& x : *b) {
        if (!x.is_number()) throw ConfigError("isoflop.budgets: expected numbers");
        list.push_back(x.get<double>());
      }
      cfg.budgets = BudgetSpec::list(std::move(list));
    } else if (b->is_object()) {
      check_keys(*b, "isoflop.budgets", {"auto"});
      auto n = opt_count(*b, "isoflop.budgets", "auto");
      if (!n) throw ConfigError("isoflop.budgets.auto: expected a count");
      cfg.budgets = BudgetSpec::automatic(*n);
    } else {
      throw ConfigError("isoflop.budgets: expected a list or {\"auto\": count}");
    }
  }
}

void parse_validation(const json& j, ExperimentConfig& cfg) {
  const std::string p = "validation";
  check_keys(j, p, {"split_c", "bootstrap"});
  cfg.split_c = opt_real(j, p, "split_c");
  if (const json* b = find(j, "bootstrap")) {
    check_keys(*b, "validation.bootstrap", {"b", "seed"});
    auto count = opt_count(*b, "validation.bootstrap", "b");
    auto seed = opt_count(*b, "validation.bootstrap", "seed");
    if (!count || !seed) throw ConfigError("validation.bootstrap: needs b and an explicit seed");
    cfg.bootstrap = BootstrapSettings{*count, *seed};
  }
}

void parse_report(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "report", {"reference_points"});
  const json* refs = find(j, "reference_points");
  if (!refs) return;
  if (!refs->is_array()) throw ConfigError("report.reference_points: expected a list");
  for (std::size_t i = 0; i < refs->size(); ++i) {
    const std::string p = fmt::format("report.reference_points[{}]", i);
    const json& r = (*refs)[i];
    check_keys(r, p, {"label", "c", "n", "d"});
    ReferencePoint rp;
    auto label = opt_string(r, p, "label");
    auto c = opt_real(r, p, "c");
    if (!label || !c) throw ConfigError(p + ": needs label and c");
    rp.label = *label;
    rp.c = *c;
    rp.n = opt_real(r, p, "n");
    rp.d = opt_real(r, p, "d");
    cfg.reference_points.push_back(rp);
  }
}

std::string grad_mode_name(OptimizerSpec::GradMode m) {
  return m == OptimizerSpec::GradMode::analytic ? "analytic" : "finite_diff";
}

std::string checkpoint_name(CheckpointPolicy::Kind k) {
  switch (k) {
    case CheckpointPolicy::Kind::final_only: return "final_only";
    case CheckpointPolicy::Kind::all: return "all";
    case CheckpointPolicy::Kind::min_fraction: return "min_fraction";
  }
  return {};
}

std::string lr_name(LrPolicy::Kind k) {
  switch (k) {
    case LrPolicy::Kind::all: return "all";
    case LrPolicy::Kind::fixed: return "fixed";
    case LrPolicy::Kind::sweep_optimal: return "sweep_optimal";
  }
  return {};
}

bool needs_grid(const ExperimentConfig& cfg) {
  return cfg.init_kind != InitStrategy::Kind::fixed || cfg.optimizer.kind == OptimizerSpec::Kind::grid;
}

}  // namespace

void ExperimentConfig::validate() const {
  filters.validate();
  objective.validate();
  optimizer.validate();
  if (optimizer.kind == OptimizerSpec::Kind::nls && !objective.is_quadratic())
    throw ObjectiveMismatch("optimizer.kind: nls needs an mse objective, got " + to_string(objective.kind));
  if (needs_grid(*this)) grid().validate(form);
  if ((init_kind == InitStrategy::Kind::top_k_of_grid || init_kind == InitStrategy::Kind::random_k) && init_k < 1)
    throw ConfigError("init.k must be at least 1");
  if (init_kind == InitStrategy::Kind::fixed) {
    if (init_params && (preset_file || preset))
      throw ConfigError("init.params: give either params or a preset, not both");
    if (!init_params && !(preset_file && preset))
      throw ConfigError("init.strategy: fixed needs init.params or init.preset_file with init.preset");
    if (init_params && init_params->size() != param_count(form))
      throw ConfigError(fmt::format("init.params: the {} form needs {} values", to_string(form), param_count(form)));
  }
  if (!(flop_constant > 0.0)) throw ConfigError("counting.flop_constant must be positive");
  if (counting.flop_method == FlopMethod::detailed && !arch_table)
    throw ConfigError("counting.arch_table: required by flop_method detailed");
  budgets.validate();
  if (split_c && !(*split_c > 0.0)) throw ConfigError("validation.split_c must be positive");
  if (bootstrap && bootstrap->b < 2) throw ConfigError("validation.bootstrap.b must be at least 2");
  for (const auto& r : reference_points)
    if (!(r.c > 0.0)) throw ConfigError("report.reference_points: c must be positive for '" + r.label + "'");
}

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "", {"hypothesis", "data", "counting", "objective", "optimizer", "init", "isoflop", "validation",
                     "report"});
  ExperimentConfig cfg;
  if (const json* s = find(j, "hypothesis")) parse_hypothesis(*s, cfg);
  if (const json* s = find(j, "data")) parse_data(*s, cfg);
  if (const json* s = find(j, "counting")) parse_counting(*s, cfg);
  if (const json* s = find(j, "objective")) parse_objective(*s, cfg);
  if (const json* s = find(j, "optimizer")) parse_optimizer(*s, cfg);
  if (const json* s = find(j, "init")) parse_init(*s, cfg);
  if (const json* s = find(j, "isoflop")) parse_isoflop(*s, cfg);
  if (const json* s = find(j, "validation")) parse_validation(*s, cfg);
  if (const json* s = find(j, "report")) parse_report(*s, cfg);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["hypothesis"] = {{"form", to_string(cfg.form)},
                     {"rationale", opt_json(cfg.rationale)},
                     {"assumptions", opt_json(cfg.assumptions)}};

  const auto& f = cfg.filters;
  json filters = {{"checkpoint_policy", checkpoint_name(f.checkpoints.kind)},
                  {"min_fraction", f.checkpoints.kind == CheckpointPolicy::Kind::min_fraction
                                       ? json(f.checkpoints.fraction)
                                       : json(nullptr)},
                  {"lr_policy", lr_name(f.lr.kind)},
                  {"lr", f.lr.lr ? json(f.lr.lr->text()) : json(nullptr)},
                  {"max_n", opt_json(f.max_n)},
                  {"dn_min", opt_json(f.dn_min)},
                  {"dn_max", opt_json(f.dn_max)},
                  {"n_convention", to_string(f.n_convention)}};
  j["data"] = {{"path", cfg.data_path},
               {"format", cfg.data_format == DataFormat::csv ? "csv" : "json"},
               {"filters", filters},
               {"metric", opt_json(cfg.metric)}};

  j["counting"] = {{"embeddings_in_n", cfg.counting.embeddings_in_n},
                   {"embeddings_in_c", cfg.counting.embeddings_in_c},
                   {"flop_method", to_string(cfg.counting.flop_method)},
                   {"arch_table", opt_json(cfg.arch_table)},
                   {"flop_constant", cfg.flop_constant}};

  j["objective"] = {{"kind", to_string(cfg.objective.kind)},
                    {"delta", cfg.objective.has_delta() ? json(cfg.objective.delta) : json(nullptr)},
                    {"space", to_string(cfg.objective.space)}};

  const auto& o = cfg.optimizer;
  j["optimizer"] = {{"kind", to_string(o.kind)},         {"memory", o.memory},
                    {"tol", o.tol},                      {"max_iter", o.max_iter},
                    {"grad_mode", grad_mode_name(o.grad_mode)}, {"fd_step", o.fd_step},
                    {"density_multiplier", o.density_multiplier}};

  json grid = nullptr;
  if (cfg.init_grid) {
    grid = json::array();
    for (const auto& a : cfg.init_grid->axes)
      grid.push_back({{"param", a.param}, {"lo", a.lo}, {"hi", a.hi}, {"count", a.count}});
  }
  j["init"] = {{"strategy", to_string(cfg.init_kind)},
               {"k", cfg.init_k},
               {"seed", cfg.init_seed},
               {"grid", grid},
               {"preset_file", opt_json(cfg.preset_file)},
               {"preset", opt_json(cfg.preset)},
               {"params", cfg.init_params ? json(*cfg.init_params) : json(nullptr)}};

  j["isoflop"] = {{"enabled", cfg.isoflop_enabled},
                  {"budgets", cfg.budgets.is_auto() ? json{{"auto", cfg.budgets.auto_count}}
                                                    : json(cfg.budgets.explicit_budgets)}};

  j["validation"] = {{"split_c", opt_json(cfg.split_c)},
                     {"bootstrap", cfg.bootstrap ? json{{"b", cfg.bootstrap->b}, {"seed", cfg.bootstrap->seed}}
                                                 : json(nullptr)}};

  json refs = json::array();
  for (const auto& r : cfg.reference_points)
    refs.push_back({{"label", r.label}, {"c", r.c}, {"n", opt_json(r.n)}, {"d", opt_json(r.d)}});
  j["report"] = {{"reference_points", refs}};
  return j;
}

std::string serialize_config(const ExperimentConfig& cfg) { return to_json(cfg).dump(2); }

std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("HashFailure", "SHA-256 digest failed");
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) { return sha256_hex(serialize_config(cfg)); }

Vector load_preset(const std::string& path, const std::string& name, LawForm form) {
  std::ifstream in(path);
  if (!in) throw ConfigError("init.preset_file: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("init.preset_file: not valid JSON: ") + e.what());
  }
  auto it = j.find(name);
  if (it == j.end()) throw ConfigError("init.preset: '" + name + "' is not in " + path);
  const auto& names = param_names(form);
  Vector v(static_cast<Eigen::Index>(names.size()));
  if (it->is_array()) {
    if (it->size() != names.size())
      throw ConfigError(fmt::format("init.preset: '{}' has {} values, the {} form needs {}", name, it->size(),
                                    to_string(form), names.size()));
    for (std::size_t i = 0; i < names.size(); ++i) v[static_cast<Eigen::Index>(i)] = (*it)[i].get<double>();
    return v;
  }
  if (!it->is_object()) throw ConfigError("init.preset: '" + name + "' must be a list or an object");
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto p = it->find(names[i]);
    if (p == it->end() || !p->is_number())
      throw ConfigError("init.preset: '" + name + "' lacks parameter '" + names[i] + "'");
    v[static_cast<Eigen::Index>(i)] = p->get<double>();
  }
  return v;
}

InitStrategy build_init(const ExperimentConfig& cfg, const std::string& base_dir) {
  const GridSpec grid = cfg.grid();
  switch (cfg.init_kind) {
    case InitStrategy::Kind::full_grid: return InitStrategy::full(grid);
    case InitStrategy::Kind::best_of_grid: return InitStrategy::best_of(grid);
    case InitStrategy::Kind::top_k_of_grid: return InitStrategy::top_k(grid, cfg.init_k);
    case InitStrategy::Kind::random_k: return InitStrategy::random(grid, cfg.init_k, cfg.init_seed);
    case InitStrategy::Kind::fixed: {
      InitStrategy s;
      if (cfg.init_params) {
        s = InitStrategy::fixed(Eigen::Map<const Vector>(cfg.init_params->data(),
                                                         static_cast<Eigen::Index>(cfg.init_params->size())));
      } else {
        std::filesystem::path p(*cfg.preset_file);
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        s = InitStrategy::fixed(load_preset(p.string(), *cfg.preset, cfg.form), *cfg.preset);
      }
      // the grid optimizer still needs a base grid to densify
      s.grid = grid;
      return s;
    }
  }
  return {};
}

}  // namespace lawlab
