#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include <fmt/format.h>

#include "lawlab/format.hpp"
#include "lawlab/lab.hpp"
#include "lawlab/parallel.hpp"
#include "lawlab/synth.hpp"

using namespace lawlab;
namespace fs = std::filesystem;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

std::string dir_of(const std::string& path) {
  const fs::path p = fs::path(path).parent_path();
  return p.empty() ? "." : p.string();
}

std::uint64_t parse_count(const std::string& text) {
  std::size_t used = 0;
  long double v = 0;
  try {
    v = std::stold(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(v >= 0) || v != std::floor(v) || v > 18446744073709551615.0L)
    throw DomainError("not a non-negative integer count: '" + text + "'");
  return static_cast<std::uint64_t>(v);
}

std::string u128_text(unsigned __int128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return s;
}

int fail(const std::exception& e) {
  std::cerr << error_object(e).dump(2) << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lawlab: fit, compare and report scaling-law experiments"};
  app.require_subcommand(1);

  std::string config, data, out, arch_table, report_path, axes = "c_vs_n", arch_id, tokens = "0", kind = "lab";
  std::vector<std::string> reports;
  std::vector<double> c_range;
  bool as_json = false, embeddings_in_n = true, embeddings_in_c = true;
  std::uint64_t seed = 0;

  auto* fit_cmd = app.add_subcommand("fit", "Run one experiment config and write its report");
  fit_cmd->add_option("--config", config, "Experiment config (JSON)")->required();
  fit_cmd->add_option("--data", data, "Data file, overriding data.path");
  fit_cmd->add_option("--arch-table", arch_table, "Architecture table, overriding counting.arch_table");
  fit_cmd->add_option("--out", out, "Report path (stdout when omitted)");

  auto* matrix_cmd = app.add_subcommand("matrix", "Run a base config under named overrides");
  matrix_cmd->add_option("--config", config, "Matrix config (JSON)")->required();
  matrix_cmd->add_option("--data", data, "Data file, overriding data.path in every variant");
  matrix_cmd->add_option("--arch-table", arch_table, "Architecture table override");
  matrix_cmd->add_option("--out", out, "Output directory")->required();

  auto* plot_cmd = app.add_subcommand("plot", "Draw allocation curves of one or more reports as SVG");
  plot_cmd->add_option("reports", reports, "Report files");
  plot_cmd->add_option("--axes", axes, "c_vs_n, c_vs_d or c_vs_rho");
  plot_cmd->add_option("--out", out, "SVG path (stdout when omitted)");
  plot_cmd->add_option("--c-range", c_range, "Compute axis bounds LO HI (default: data padded one decade)")
      ->expected(2);

  auto* check_cmd = app.add_subcommand("checklist", "Fill the reproducibility checklist from a config and report");
  check_cmd->add_option("--config", config, "Experiment config")->required();
  check_cmd->add_option("--report", report_path, "Report produced from that config")->required();
  check_cmd->add_option("--out", out, "Markdown path (stdout when omitted)");

  auto* flops_cmd = app.add_subcommand("flops", "Parameter and FLOP counts of one architecture");
  flops_cmd->add_option("--arch-table", arch_table, "Architecture table (JSON)")->required();
  flops_cmd->add_option("--arch", arch_id, "Architecture id")->required();
  flops_cmd->add_option("--tokens", tokens, "Training tokens D");
  flops_cmd->add_option("--embeddings-in-n", embeddings_in_n, "Count embeddings in N for 6ND (default true)");
  flops_cmd->add_option("--embeddings-in-c", embeddings_in_c, "Count embeddings in detailed C (default true)");
  flops_cmd->add_flag("--json", as_json, "Print JSON instead of text");

  auto* synth_cmd = app.add_subcommand("synth", "Write a bundled synthetic dataset as CSV");
  synth_cmd->add_option("--kind", kind, "lab or ratio");
  synth_cmd->add_option("--seed", seed, "Noise seed (lab only)");
  synth_cmd->add_option("--arch-table", arch_table, "Architectures for the lab dataset");
  synth_cmd->add_option("--out", out, "CSV path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);
  const unsigned threads = default_threads();

  try {
    if (*fit_cmd) {
      const ExperimentConfig cfg = load_config(config);
      RunOptions opts;
      if (!data.empty()) opts.data_path = data;
      if (!arch_table.empty()) opts.arch_table = arch_table;
      opts.base_dir = dir_of(config);
      opts.threads = threads;
      write_text(out, dump_report(run_experiment(cfg, opts)));
    } else if (*matrix_cmd) {
      RunOptions opts;
      if (!data.empty()) opts.data_path = data;
      if (!arch_table.empty()) opts.arch_table = arch_table;
      opts.threads = threads;
      const MatrixOutcome m = run_matrix(read_json(config), dir_of(config), out, opts);
      std::cout << fmt::format("{} variants, {} failed; comparison written to {}\n", m.variants.size(),
                               m.failures.size(), (fs::path(out) / "comparison.csv").string());
      for (const auto& f : m.failures) std::cout << "failed: " << f << "\n";
    } else if (*plot_cmd) {
      std::vector<PlotSeries> series;
      for (const auto& path : reports) {
        json r = read_json(path);
        std::string label = r.contains("variant") ? r["variant"].get<std::string>() : fs::path(path).stem().string();
        series.push_back({label, std::move(r)});
      }
      std::optional<std::pair<double, double>> range;
      if (!c_range.empty()) range = std::make_pair(c_range[0], c_range[1]);
      write_text(out, render_plot(series, parse_plot_axes(axes), range));
    } else if (*check_cmd) {
      write_text(out, render_checklist(load_config(config), read_json(report_path)));
    } else if (*flops_cmd) {
      const ArchTable table = load_arch_table(arch_table);
      const ArchDescriptor& a = lookup_arch(table, arch_id);
      const std::uint64_t d = parse_count(tokens);
      const std::uint64_t n_total = count_params(a, true);
      const std::uint64_t n_nonembed = count_params(a, false);
      const std::uint64_t n_for_c = embeddings_in_n ? n_total : n_nonembed;
      const unsigned __int128 c6 = static_cast<unsigned __int128>(6) * n_for_c * d;
      const double fpt_total = flops_per_token(a, true);
      const double fpt_nonembed = flops_per_token(a, false);
      CountingPolicy detailed{embeddings_in_n, embeddings_in_c, FlopMethod::detailed};
      const double c_detailed = training_flops(a, d, detailed);
      const double ratio = c6 == 0 ? NAN : c_detailed / static_cast<double>(c6);
      if (as_json) {
        json j = {{"arch", arch_id},
                  {"tokens", d},
                  {"n_total", n_total},
                  {"n_nonembed", n_nonembed},
                  {"forward_flops_per_token_total", fpt_total},
                  {"forward_flops_per_token_nonembed", fpt_nonembed},
                  {"c_detailed", c_detailed},
                  {"c_6nd", u128_text(c6)},
                  {"c_6nd_uses", embeddings_in_n ? "n_total" : "n_nonembed"},
                  {"detailed_over_6nd", ratio}};
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << fmt::format("arch: {}\n", arch_id);
        std::cout << fmt::format("tokens: {}\n", d);
        std::cout << fmt::format("n_total: {}\n", n_total);
        std::cout << fmt::format("n_nonembed: {}\n", n_nonembed);
        std::cout << fmt::format("forward_flops_per_token_total: {}\n", format_real(fpt_total));
        std::cout << fmt::format("forward_flops_per_token_nonembed: {}\n", format_real(fpt_nonembed));
        std::cout << fmt::format("c_detailed: {}\n", format_real(c_detailed));
        std::cout << fmt::format("c_6nd ({}): {}\n", embeddings_in_n ? "n_total" : "n_nonembed", u128_text(c6));
        std::cout << fmt::format("detailed_over_6nd: {}\n", format_real(ratio));
      }
    } else if (*synth_cmd) {
      if (kind == "lab") {
        if (arch_table.empty()) throw ConfigError("synth --kind lab needs --arch-table");
        write_text(out, to_csv(synthetic_lab_dataset(load_arch_table(arch_table), seed)));
      } else if (kind == "ratio") {
        write_text(out, to_csv(synthetic_ratio_dataset()));
      } else {
        throw ConfigError("unknown synthetic dataset kind '" + kind + "'");
      }
    }
  } catch (const std::exception& e) {
    return fail(e);
  }
  return 0;
}
