#include "lawlab/run_ledger.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

#include "lawlab/error.hpp"

namespace lawlab {

namespace {

struct DecimalParts {
  bool negative = false;
  std::string digits;  // no leading/trailing zeros; empty means zero
  long exponent = 0;
};

std::optional<DecimalParts> split_decimal(std::string_view s) {
  DecimalParts p;
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) p.negative = s[i++] == '-';
  std::string mantissa;
  long frac_digits = 0;
  bool seen_digit = false;
  bool seen_point = false;
  for (; i < s.size(); ++i) {
    char ch = s[i];
    if (ch >= '0' && ch <= '9') {
      mantissa.push_back(ch);
      seen_digit = true;
      if (seen_point) ++frac_digits;
    } else if (ch == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) return std::nullopt;
  long exp = 0;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    bool neg = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) neg = s[i++] == '-';
    if (i == s.size()) return std::nullopt;
    auto [ptr, ec] = std::from_chars(s.data() + i, s.data() + s.size(), exp);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    if (neg) exp = -exp;
    i = s.size();
  }
  if (i != s.size()) return std::nullopt;

  exp -= frac_digits;
  auto first = mantissa.find_first_not_of('0');
  if (first == std::string::npos) {
    p.negative = false;
    p.exponent = 0;
    return p;
  }
  mantissa.erase(0, first);
  while (!mantissa.empty() && mantissa.back() == '0') {
    mantissa.pop_back();
    ++exp;
  }
  p.digits = std::move(mantissa);
  p.exponent = exp;
  return p;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t parse_count(std::string_view text, std::size_t row, const char* field) {
  auto parts = split_decimal(text);
  if (!parts) throw ParseError(row, fmt::format("{} is not a number: '{}'", field, text));
  if (parts->negative) throw ParseError(row, fmt::format("{} must be non-negative", field));
  if (parts->exponent < 0) throw ParseError(row, fmt::format("{} must be an integer", field));
  std::uint64_t value = 0;
  for (char ch : parts->digits) {
    if (value > (std::numeric_limits<std::uint64_t>::max() - 9) / 10)
      throw ParseError(row, fmt::format("{} is too large", field));
    value = value * 10 + static_cast<std::uint64_t>(ch - '0');
  }
  for (long k = 0; k < parts->exponent && value != 0; ++k) {
    if (value > std::numeric_limits<std::uint64_t>::max() / 10)
      throw ParseError(row, fmt::format("{} is too large", field));
    value *= 10;
  }
  return value;
}

const std::vector<std::string>& column_names() {
  static const std::vector<std::string> names = {
      "run_id", "n_total", "n_nonembed", "tokens_seen", "step",
      "total_steps", "peak_lr", "loss", "source", "arch_id"};
  return names;
}

// Columns that must appear in the header. arch_id may be omitted entirely.
constexpr std::size_t kRequiredColumns = 9;

using Fields = std::map<std::string, std::string>;

RunRecord record_from_fields(const Fields& f, std::size_t row) {
  auto get = [&](const std::string& name) -> std::string {
    auto it = f.find(name);
    return it == f.end() ? std::string{} : trim(it->second);
  };
  auto require = [&](const std::string& name) {
    auto v = get(name);
    if (v.empty()) throw ParseError(row, name + " is required");
    return v;
  };

  RunRecord r;
  r.run_id = require("run_id");
  r.n_total = parse_count(require("n_total"), row, "n_total");
  if (auto v = get("n_nonembed"); !v.empty()) r.n_nonembed = parse_count(v, row, "n_nonembed");
  r.tokens_seen = parse_count(require("tokens_seen"), row, "tokens_seen");
  r.step = parse_count(require("step"), row, "step");
  if (auto v = get("total_steps"); !v.empty())
    r.total_steps = parse_count(v, row, "total_steps");
  if (auto v = get("peak_lr"); !v.empty()) {
    try {
      r.peak_lr = Decimal::parse(v);
    } catch (const DomainError&) {
      throw ParseError(row, "peak_lr is not a number: '" + v + "'");
    }
  }
  auto loss_text = require("loss");
  try {
    r.loss = Decimal::parse(loss_text);
  } catch (const DomainError&) {
    throw ParseError(row, "loss is not a number: '" + loss_text + "'");
  }
  r.source = get("source");
  if (auto v = get("arch_id"); !v.empty()) r.arch_id = v;

  if (!(r.loss.value() > 0.0) || !std::isfinite(r.loss.value()))
    throw ParseError(row, "loss must be positive");
  if (r.tokens_seen == 0) throw ParseError(row, "tokens_seen must be positive");
  if (r.n_total == 0) throw ParseError(row, "n_total must be positive");
  if (r.n_nonembed) {
    if (*r.n_nonembed == 0) throw ParseError(row, "n_nonembed must be positive");
    if (*r.n_nonembed > r.n_total) throw ParseError(row, "n_nonembed exceeds n_total");
  }
  if (r.step < 1) throw ParseError(row, "step must be at least 1");
  if (r.total_steps && r.step > *r.total_steps)
    throw ParseError(row, "step exceeds total_steps");
  if (r.peak_lr && !(r.peak_lr->value() > 0.0))
    throw ParseError(row, "peak_lr must be positive");
  return r;
}

// Splits one CSV line; double quotes delimit fields containing commas.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t row) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) throw ParseError(row, "unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void check_unique(const Dataset& ds) {
  std::map<std::pair<std::string, std::uint64_t>, std::size_t> seen;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    auto [it, inserted] = seen.emplace(std::make_pair(r.run_id, r.step), i + 1);
    if (!inserted)
      throw ParseError(i + 1, fmt::format("duplicate (run_id, step) = ({}, {}), first seen at row {}",
                                          r.run_id, r.step, it->second));
  }
}

Dataset ingest_csv(std::istream& in, std::string label) {
  Dataset ds;
  ds.label = std::move(label);
  std::string line;
  if (!std::getline(in, line)) return ds;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_csv_line(line, 0);
  for (auto& h : header) h = trim(h);
  const auto& names = column_names();
  for (std::size_t k = 0; k < kRequiredColumns; ++k) {
    if (std::find(header.begin(), header.end(), names[k]) == header.end())
      throw SchemaError("missing required column '" + names[k] + "'");
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line, row);
    if (cells.size() != header.size())
      throw ParseError(row, fmt::format("expected {} fields, found {}", header.size(), cells.size()));
    Fields f;
    for (std::size_t k = 0; k < header.size(); ++k) f[header[k]] = cells[k];
    ds.records.push_back(record_from_fields(f, row));
  }
  check_unique(ds);
  return ds;
}

Dataset ingest_json(std::istream& in, std::string label) {
  Dataset ds;
  ds.label = std::move(label);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw SchemaError("JSON input must be an array of records");
  std::size_t row = 0;
  for (const auto& obj : doc) {
    ++row;
    if (!obj.is_object()) throw ParseError(row, "record is not an object");
    Fields f;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      const auto& v = it.value();
      if (v.is_null()) continue;
      f[it.key()] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    for (const char* name : {"run_id", "n_total", "tokens_seen", "step", "loss"}) {
      if (!f.count(name)) throw SchemaError(fmt::format("record {} lacks required field '{}'", row, name));
    }
    ds.records.push_back(record_from_fields(f, row));
  }
  check_unique(ds);
  return ds;
}

Dataset with_label(const Dataset& ds, std::vector<RunRecord> records, const std::string& what) {
  Dataset out;
  out.records = std::move(records);
  out.label = ds.label.empty() ? what : ds.label + " | " + what;
  return out;
}

std::string fmt_real(double v) { return fmt::format("{}", v); }

}  // namespace

Decimal Decimal::parse(std::string_view text) {
  auto t = trim(text);
  auto parts = split_decimal(t);
  if (!parts) throw DomainError("not a decimal number: '" + t + "'");
  Decimal d;
  d.text_ = t;
  if (parts->digits.empty()) {
    d.canonical_ = "0";
  } else {
    d.canonical_ = fmt::format("{}{}e{}", parts->negative ? "-" : "", parts->digits, parts->exponent);
  }
  const char* b = t.data();
  if (!t.empty() && t[0] == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, t.data() + t.size(), d.value_);
  if (ec == std::errc::result_out_of_range) {
    d.value_ = parts->negative ? -std::numeric_limits<double>::infinity()
                               : std::numeric_limits<double>::infinity();
  } else if (ec != std::errc()) {
    throw DomainError("not a decimal number: '" + t + "'");
  }
  return d;
}

std::uint64_t RunRecord::n(NConvention convention) const {
  if (convention == NConvention::total) return n_total;
  if (!n_nonembed)
    throw MissingField("record " + key() + " has no n_nonembed but the nonembed convention was requested");
  return *n_nonembed;
}

std::string RunRecord::key() const { return run_id + "@" + std::to_string(step); }

DataFormat parse_data_format(std::string_view name) {
  if (name == "csv") return DataFormat::csv;
  if (name == "json") return DataFormat::json;
  throw ConfigError("unknown data format '" + std::string(name) + "'");
}

Dataset ingest(std::istream& in, DataFormat format, std::string label) {
  return format == DataFormat::csv ? ingest_csv(in, std::move(label))
                                   : ingest_json(in, std::move(label));
}

Dataset ingest_file(const std::string& path, DataFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open data file '" + path + "'");
  return ingest(in, format, path);
}

std::string to_csv(const Dataset& ds) {
  bool any_arch = std::any_of(ds.records.begin(), ds.records.end(),
                              [](const RunRecord& r) { return r.arch_id.has_value(); });
  std::string out = "run_id,n_total,n_nonembed,tokens_seen,step,total_steps,peak_lr,loss,source";
  if (any_arch) out += ",arch_id";
  out += '\n';
  for (const auto& r : ds.records) {
    out += csv_escape(r.run_id);
    out += ',' + std::to_string(r.n_total);
    out += ',' + (r.n_nonembed ? std::to_string(*r.n_nonembed) : std::string{});
    out += ',' + std::to_string(r.tokens_seen);
    out += ',' + std::to_string(r.step);
    out += ',' + (r.total_steps ? std::to_string(*r.total_steps) : std::string{});
    out += ',' + (r.peak_lr ? r.peak_lr->text() : std::string{});
    out += ',' + r.loss.text();
    out += ',' + csv_escape(r.source);
    if (any_arch) out += ',' + csv_escape(r.arch_id.value_or(""));
    out += '\n';
  }
  return out;
}

std::string CheckpointPolicy::describe() const {
  switch (kind) {
    case Kind::final_only: return "checkpoints=final_only";
    case Kind::all: return "checkpoints=all";
    case Kind::min_fraction: return "checkpoints=min_fraction(" + fmt_real(fraction) + ")";
  }
  return {};
}

std::string LrPolicy::describe() const {
  switch (kind) {
    case Kind::all: return "lr=all";
    case Kind::fixed: return "lr=fixed(" + (lr ? lr->text() : std::string("?")) + ")";
    case Kind::sweep_optimal: return "lr=sweep_optimal";
  }
  return {};
}

void FilterSpec::validate() const {
  if (checkpoints.kind == CheckpointPolicy::Kind::min_fraction &&
      !(checkpoints.fraction >= 0.0 && checkpoints.fraction <= 1.0))
    throw ConfigError("data.filters.checkpoint_policy: fraction must lie in [0, 1]");
  if (lr.kind == LrPolicy::Kind::fixed && !lr.lr)
    throw ConfigError("data.filters.lr_policy: fixed policy needs a learning rate");
  if (dn_min && dn_max && !(*dn_min < *dn_max))
    throw ConfigError("data.filters: dn_min must be smaller than dn_max");
  if (max_n && !(*max_n > 0.0)) throw ConfigError("data.filters.max_n must be positive");
}

Dataset filter_checkpoints(const Dataset& ds, const CheckpointPolicy& policy, FilterTally* tally) {
  std::vector<RunRecord> kept;
  std::size_t missing = 0;
  for (const auto& r : ds.records) {
    if (policy.kind == CheckpointPolicy::Kind::all) {
      kept.push_back(r);
      continue;
    }
    if (!r.total_steps) {
      ++missing;
      continue;
    }
    bool keep = policy.kind == CheckpointPolicy::Kind::final_only
                    ? r.step == *r.total_steps
                    : static_cast<double>(r.step) / static_cast<double>(*r.total_steps) >=
                          policy.fraction;
    if (keep) kept.push_back(r);
  }
  if (tally) tally->missing_total_steps += missing;
  return with_label(ds, std::move(kept), policy.describe());
}

Dataset filter_lr(const Dataset& ds, const LrPolicy& policy) {
  if (policy.kind == LrPolicy::Kind::all) return with_label(ds, ds.records, policy.describe());

  std::vector<RunRecord> kept;
  if (policy.kind == LrPolicy::Kind::fixed) {
    if (!policy.lr) throw ConfigError("fixed learning-rate policy needs a value");
    for (const auto& r : ds.records)
      if (r.peak_lr && *r.peak_lr == *policy.lr) kept.push_back(r);
    return with_label(ds, std::move(kept), policy.describe());
  }

  using Key = std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>;
  std::map<Key, std::size_t> winner;
  auto lr_of = [](const RunRecord& r) {
    return r.peak_lr ? r.peak_lr->value() : std::numeric_limits<double>::infinity();
  };
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    Key key{r.n_total, r.tokens_seen, r.step};
    auto it = winner.find(key);
    if (it == winner.end()) {
      winner.emplace(key, i);
      continue;
    }
    const auto& best = ds.records[it->second];
    double lr = r.loss.value(), lb = best.loss.value();
    if (lr < lb || (lr == lb && lr_of(r) < lr_of(best))) it->second = i;
  }
  std::vector<bool> keep(ds.records.size(), false);
  for (const auto& [key, idx] : winner) keep[idx] = true;
  for (std::size_t i = 0; i < ds.records.size(); ++i)
    if (keep[i]) kept.push_back(ds.records[i]);
  return with_label(ds, std::move(kept), policy.describe());
}

Dataset filter_scale(const Dataset& ds, std::optional<double> max_n, std::optional<double> dn_min,
                     std::optional<double> dn_max, NConvention convention) {
  std::vector<RunRecord> kept;
  for (const auto& r : ds.records) {
    if (!max_n && !dn_min && !dn_max) {
      kept.push_back(r);
      continue;
    }
    double n = static_cast<double>(r.n(convention));
    double ratio = static_cast<double>(r.tokens_seen) / n;
    if (max_n && n > *max_n) continue;
    if (dn_min && ratio < *dn_min) continue;
    if (dn_max && ratio > *dn_max) continue;
    kept.push_back(r);
  }
  std::string what = "scale(";
  std::vector<std::string> parts;
  if (max_n) parts.push_back("max_n=" + fmt_real(*max_n));
  if (dn_min) parts.push_back("dn_min=" + fmt_real(*dn_min));
  if (dn_max) parts.push_back("dn_max=" + fmt_real(*dn_max));
  parts.push_back("n=" + to_string(convention));
  what += fmt::format("{}", fmt::join(parts, ",")) + ")";
  return with_label(ds, std::move(kept), what);
}

Dataset apply_filters(const Dataset& ds, const FilterSpec& spec, FilterProvenance* provenance) {
  spec.validate();
  FilterTally tally;
  auto a = filter_checkpoints(ds, spec.checkpoints, &tally);
  auto b = filter_lr(a, spec.lr);
  auto c = filter_scale(b, spec.max_n, spec.dn_min, spec.dn_max, spec.n_convention);
  if (provenance) {
    provenance->input = ds.size();
    provenance->after_checkpoints = a.size();
    provenance->after_lr = b.size();
    provenance->after_scale = c.size();
    provenance->missing_total_steps = tally.missing_total_steps;
  }
  return c;
}

std::string to_string(NConvention c) { return c == NConvention::total ? "total" : "nonembed"; }

NConvention parse_n_convention(std::string_view name) {
  if (name == "total") return NConvention::total;
  if (name == "nonembed") return NConvention::nonembed;
  throw ConfigError("unknown n_convention '" + std::string(name) + "'");
}

}  // namespace lawlab
