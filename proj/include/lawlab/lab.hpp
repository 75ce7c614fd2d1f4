#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lawlab/config.hpp"
#include "lawlab/error.hpp"

namespace lawlab {

inline constexpr int kReportSchemaVersion = 1;

/// A module error tagged with the config section it came from.
class SectionError : public Error {
 public:
  SectionError(std::string path, const Error& inner)
      : Error(inner.code(), path + ": " + inner.what()), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// {"error": {"code", "path", "message"}}. The path is the config key the
/// error was attributed to, or null.
json error_object(const std::exception& e);

struct RunOptions {
  std::optional<std::string> data_path;   ///< overrides data.path
  std::optional<std::string> arch_table;  ///< overrides counting.arch_table
  std::string base_dir;                   ///< relative paths in the config resolve here
  unsigned threads = 1;
};

/// ingest -> filter -> annotate -> fit (+ isoflop) -> validate, as a report.
json run_experiment(const ExperimentConfig& cfg, const RunOptions& options);

/// The report without its timing block, for reproducibility comparisons.
json without_timing(json report);

/// Deterministic report text (2-space indent, sorted keys, trailing newline).
std::string dump_report(const json& report);

struct MatrixOutcome {
  std::vector<std::string> variants;
  std::vector<std::string> failures;  ///< names of variants that raised
  std::string comparison_csv;
};

/// Runs every variant of {"base": path-or-object, "variants": [{"name",
/// "overrides"}]} (overrides are JSON merge patches), writing
/// <out_dir>/<name>.json (or <name>.error.json) and comparison.csv.
MatrixOutcome run_matrix(const json& matrix, const std::string& matrix_dir, const std::string& out_dir,
                         const RunOptions& options);

enum class PlotAxes { c_vs_n, c_vs_d, c_vs_rho };
PlotAxes parse_plot_axes(std::string_view name);
std::string to_string(PlotAxes a);

struct PlotSeries {
  std::string label;
  json report;
};

/// Static log-log SVG of allocation curves. Throws EmptyReports.
/// The compute axis spans the data and reference points padded by one decade
/// each side unless c_range gives explicit bounds.
std::string render_plot(const std::vector<PlotSeries>& series, PlotAxes axes,
                        std::optional<std::pair<double, double>> c_range = std::nullopt);

/// Markdown checklist, one "- question: answer" line per item. Throws
/// HashMismatch when the report was produced from a different config.
std::string render_checklist(const ExperimentConfig& cfg, const json& report);

/// Number of questions per checklist section, in order.
const std::vector<std::pair<std::string, std::size_t>>& checklist_sections();

}  // namespace lawlab
