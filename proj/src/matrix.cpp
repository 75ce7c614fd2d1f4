#include <filesystem>
#include <fstream>
#include <regex>
#include <set>

#include <fmt/format.h>

#include "lawlab/format.hpp"
#include "lawlab/lab.hpp"

namespace lawlab {

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

std::string csv_num(const json& v) {
  if (!v.is_number()) return "";
  return format_real(v.get<double>());
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

// (alpha, beta) columns: the two exponents of each form.
std::pair<json, json> exponents(const json& best) {
  const auto& p = best.at("params");
  const std::string form = best.at("form");
  if (form == "chinchilla") return {p.at("alpha"), p.at("beta")};
  if (form == "tied") return {p.at("alpha"), p.at("alpha")};
  return {p.at("alpha_n"), p.at("alpha_d")};
}

}  // namespace

MatrixOutcome run_matrix(const json& matrix, const std::string& matrix_dir, const std::string& out_dir,
                         const RunOptions& options) {
  if (!matrix.is_object() || !matrix.contains("base") || !matrix.contains("variants"))
    throw ConfigError("matrix: needs \"base\" and \"variants\"");
  for (const auto& [key, _] : matrix.items())
    if (key != "base" && key != "variants") throw ConfigError("matrix." + key + ": unknown key");

  json base;
  std::string base_dir = matrix_dir;
  if (matrix["base"].is_string()) {
    std::filesystem::path p(matrix["base"].get<std::string>());
    if (p.is_relative()) p = std::filesystem::path(matrix_dir) / p;
    std::ifstream in(p);
    if (!in) throw ConfigError("matrix.base: cannot open '" + p.string() + "'");
    try {
      base = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("matrix.base: not valid JSON: ") + e.what());
    }
    base_dir = p.parent_path().string();
  } else if (matrix["base"].is_object()) {
    base = matrix["base"];
  } else {
    throw ConfigError("matrix.base: expected a path or an object");
  }
  const ExperimentConfig base_cfg = parse_config(base);

  const json& variants = matrix["variants"];
  if (!variants.is_array() || variants.empty()) throw ConfigError("matrix.variants: expected a non-empty list");
  static const std::regex safe_name("^[A-Za-z0-9_.-]+$");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const auto& v = variants[i];
    if (!v.is_object() || !v.contains("name") || !v["name"].is_string())
      throw ConfigError(fmt::format("matrix.variants[{}]: needs a name", i));
    for (const auto& [key, _] : v.items())
      if (key != "name" && key != "overrides")
        throw ConfigError(fmt::format("matrix.variants[{}].{}: unknown key", i, key));
    const std::string name = v["name"];
    if (!std::regex_match(name, safe_name))
      throw ConfigError(fmt::format("matrix.variants[{}].name: '{}' is not a safe file name", i, name));
    if (!seen.insert(name).second) throw ConfigError("matrix.variants: duplicate name '" + name + "'");
  }

  std::filesystem::create_directories(out_dir);
  RunOptions opts = options;
  opts.base_dir = base_dir;

  MatrixOutcome outcome;
  std::vector<json> reports(variants.size());
  std::vector<std::string> errors(variants.size());
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const std::string name = variants[i]["name"];
    outcome.variants.push_back(name);
    json merged = base;
    if (variants[i].contains("overrides")) merged.merge_patch(variants[i]["overrides"]);
    try {
      const ExperimentConfig cfg = parse_config(merged);
      json report = run_experiment(cfg, opts);
      report["variant"] = name;
      write_file(std::filesystem::path(out_dir) / (name + ".json"), dump_report(report));
      reports[i] = std::move(report);
    } catch (const std::exception& e) {
      json err = error_object(e);
      err["variant"] = name;
      write_file(std::filesystem::path(out_dir) / (name + ".error.json"), err.dump(2) + "\n");
      errors[i] = err["error"]["code"].get<std::string>() + ": " + e.what();
      outcome.failures.push_back(name);
    }
  }

  // lowest objective among successful variants, first in declared order on ties
  std::optional<std::size_t> lowest;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].is_null()) continue;
    const double f = reports[i]["best"]["objective"].is_number() ? reports[i]["best"]["objective"].get<double>()
                                                                  : INFINITY;
    if (!lowest || f < reports[*lowest]["best"]["objective"].get<double>()) lowest = i;
  }

  std::string csv = "variant,form,objective_kind,objective,alpha,beta,allocation_exponent";
  for (const auto& r : base_cfg.reference_points) csv += "," + csv_field("n_opt[" + r.label + "]");
  csv += ",converged,lowest_objective,error\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const std::string name = outcome.variants[i];
    if (reports[i].is_null()) {
      csv += csv_field(name) + ",,,,,,";
      for (std::size_t k = 0; k < base_cfg.reference_points.size(); ++k) csv += ",";
      csv += ",false,false," + csv_field(errors[i]) + "\n";
      continue;
    }
    const json& rep = reports[i];
    const json& best = rep["best"];
    const auto [a, b] = exponents(best);
    csv += csv_field(name) + "," + best["form"].get<std::string>() + "," +
           rep["config"]["objective"]["kind"].get<std::string>() + "," + csv_num(best["objective"]) + "," +
           csv_num(a) + "," + csv_num(b) + "," + csv_num(best["allocation_exponent"]);
    for (const auto& r : base_cfg.reference_points) {
      json n = nullptr;
      for (const auto& e : rep["allocation"])
        if (e["label"] == r.label) n = e["n_opt"];
      csv += "," + csv_num(n);
    }
    csv += std::string(",") + (best["converged"].get<bool>() ? "true" : "false") + "," +
           (lowest && *lowest == i ? "true" : "false") + ",\n";
  }
  write_file(std::filesystem::path(out_dir) / "comparison.csv", csv);
  outcome.comparison_csv = std::move(csv);
  return outcome;
}

}  // namespace lawlab
