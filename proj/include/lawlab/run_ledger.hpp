#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lawlab {

/// A decimal literal as it appeared in the input. Equality is exact decimal
/// equality ("4e-3" == "0.004"), never a floating-point tolerance.
class Decimal {
 public:
  static Decimal parse(std::string_view text);  // throws DomainError

  const std::string& text() const noexcept { return text_; }
  double value() const noexcept { return value_; }
  /// Normalized "<sign><digits>e<exp>" form; equal iff the decimals are equal.
  const std::string& canonical() const noexcept { return canonical_; }

  friend bool operator==(const Decimal& a, const Decimal& b) {
    return a.canonical_ == b.canonical_;
  }

 private:
  std::string text_;
  std::string canonical_;
  double value_ = 0.0;
};

enum class NConvention { total, nonembed };

/// One evaluated checkpoint of one training run.
struct RunRecord {
  std::string run_id;
  std::uint64_t n_total = 0;
  std::optional<std::uint64_t> n_nonembed;
  std::uint64_t tokens_seen = 0;
  std::uint64_t step = 0;
  std::optional<std::uint64_t> total_steps;
  std::optional<Decimal> peak_lr;
  Decimal loss;
  std::string source;
  std::optional<std::string> arch_id;

  /// N under the given convention. Throws MissingField when the nonembed
  /// count was not supplied.
  std::uint64_t n(NConvention convention) const;
  bool is_final() const noexcept { return total_steps && step == *total_steps; }
  /// "run_id@step", used in diagnostics.
  std::string key() const;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct Dataset {
  std::vector<RunRecord> records;
  std::string label;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
};

enum class DataFormat { csv, json };

DataFormat parse_data_format(std::string_view name);

/// Reads records in the CSV or JSON layout. Row numbers in ParseError are
/// 1-based data rows (the CSV header is row 0).
Dataset ingest(std::istream& in, DataFormat format, std::string label = "input");
Dataset ingest_file(const std::string& path, DataFormat format);

/// Canonical CSV with header; loss and peak_lr keep their ingested text.
std::string to_csv(const Dataset& ds);

struct CheckpointPolicy {
  enum class Kind { final_only, all, min_fraction };
  Kind kind = Kind::final_only;
  double fraction = 0.0;

  static CheckpointPolicy final_only() { return {Kind::final_only, 0.0}; }
  static CheckpointPolicy all() { return {Kind::all, 0.0}; }
  static CheckpointPolicy min_fraction(double f) { return {Kind::min_fraction, f}; }

  std::string describe() const;
};

struct LrPolicy {
  enum class Kind { all, fixed, sweep_optimal };
  Kind kind = Kind::all;
  std::optional<Decimal> lr;

  static LrPolicy all() { return {Kind::all, std::nullopt}; }
  static LrPolicy fixed(std::string_view lr) { return {Kind::fixed, Decimal::parse(lr)}; }
  static LrPolicy sweep_optimal() { return {Kind::sweep_optimal, std::nullopt}; }

  std::string describe() const;
};

struct FilterSpec {
  CheckpointPolicy checkpoints = CheckpointPolicy::final_only();
  LrPolicy lr = LrPolicy::all();
  std::optional<double> max_n;
  std::optional<double> dn_min;
  std::optional<double> dn_max;
  NConvention n_convention = NConvention::total;

  void validate() const;  // throws ConfigError
};

struct FilterTally {
  std::size_t missing_total_steps = 0;
};

/// Records without total_steps are dropped under final_only and
/// min_fraction; the count is added to `tally`.
Dataset filter_checkpoints(const Dataset& ds, const CheckpointPolicy& policy,
                           FilterTally* tally = nullptr);

/// sweep_optimal keeps, per (n_total, tokens_seen, step), the lowest-loss
/// record; ties go to the lower learning rate, then to the earlier record.
Dataset filter_lr(const Dataset& ds, const LrPolicy& policy);

/// Bounds are inclusive. D is tokens_seen; N is read per `convention`.
Dataset filter_scale(const Dataset& ds, std::optional<double> max_n,
                     std::optional<double> dn_min, std::optional<double> dn_max,
                     NConvention convention);

struct FilterProvenance {
  std::size_t input = 0;
  std::size_t after_checkpoints = 0;
  std::size_t after_lr = 0;
  std::size_t after_scale = 0;
  std::size_t missing_total_steps = 0;
};

Dataset apply_filters(const Dataset& ds, const FilterSpec& spec,
                      FilterProvenance* provenance = nullptr);

std::string to_string(NConvention c);
NConvention parse_n_convention(std::string_view name);

}  // namespace lawlab
