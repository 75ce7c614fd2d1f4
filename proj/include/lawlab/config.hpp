#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "lawlab/fitters.hpp"
#include "lawlab/flops.hpp"
#include "lawlab/isoflop.hpp"
#include "lawlab/objectives.hpp"
#include "lawlab/run_ledger.hpp"
#include "lawlab/validation.hpp"

namespace lawlab {

using json = nlohmann::json;

struct ReferencePoint {
  std::string label;
  double c = 0.0;
  std::optional<double> n;
  std::optional<double> d;
};

struct BootstrapSettings {
  std::size_t b = 0;
  std::uint64_t seed = 0;
};

/// One experiment, in sections that follow the reproducibility checklist.
/// Optional free-text fields only feed the checklist answers.
struct ExperimentConfig {
  // hypothesis
  LawForm form = LawForm::chinchilla;
  std::optional<std::string> rationale;
  std::optional<std::string> assumptions;

  // data
  std::string data_path;
  DataFormat data_format = DataFormat::csv;
  FilterSpec filters;
  std::optional<std::string> metric;

  // counting
  CountingPolicy counting;
  std::optional<std::string> arch_table;
  double flop_constant = 6.0;

  ObjectiveSpec objective;
  OptimizerSpec optimizer;

  // init
  InitStrategy::Kind init_kind = InitStrategy::Kind::top_k_of_grid;
  std::size_t init_k = 100;
  std::uint64_t init_seed = 0;
  std::optional<GridSpec> init_grid;  ///< default grid of the form when absent
  std::optional<std::string> preset_file;
  std::optional<std::string> preset;
  std::optional<std::vector<double>> init_params;

  // isoflop
  bool isoflop_enabled = false;
  BudgetSpec budgets = BudgetSpec::automatic(8);

  // validation
  std::optional<double> split_c;
  std::optional<BootstrapSettings> bootstrap;

  // report
  std::vector<ReferencePoint> reference_points;

  /// Cross-section checks (objective/optimizer pairing, grid axes vs form).
  void validate() const;
  GridSpec grid() const { return init_grid ? *init_grid : GridSpec::default_for(form); }
};

/// Throws ConfigError whose message starts with the offending key path.
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::string& path);
json to_json(const ExperimentConfig& cfg);

/// Deterministic text of to_json(cfg), the form embedded in reports.
std::string serialize_config(const ExperimentConfig& cfg);
/// SHA-256 hex digest of serialize_config.
std::string config_hash(const ExperimentConfig& cfg);
std::string sha256_hex(const std::string& text);

/// Named parameter vectors: {"name": {"param": value, ...}} or {"name": [..]}.
Vector load_preset(const std::string& path, const std::string& name, LawForm form);

/// Resolves the init section. Fixed inits come from `init.params` or the
/// preset file, resolved against `base_dir`.
InitStrategy build_init(const ExperimentConfig& cfg, const std::string& base_dir);

}  // namespace lawlab
