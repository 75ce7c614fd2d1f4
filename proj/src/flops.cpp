#include "lawlab/flops.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "lawlab/error.hpp"

namespace lawlab {

namespace {

std::uint64_t ffn_matrices(FfnKind k) { return k == FfnKind::two_matrix ? 2 : 3; }

}  // namespace

void ArchDescriptor::validate() const {
  if (n_layers < 1 || d_model < 1 || n_heads < 1 || head_dim < 1 || ffn_dim < 1 || vocab < 1 ||
      seq_len < 1)
    throw DomainError("architecture counts must all be at least 1");
}

std::string CountingPolicy::describe() const {
  return fmt::format("embeddings_in_n={}, embeddings_in_c={}, flop_method={}", embeddings_in_n,
                     embeddings_in_c, to_string(flop_method));
}

std::uint64_t embedding_params(const ArchDescriptor& arch) {
  std::uint64_t one = arch.vocab * arch.d_model;
  return arch.tied_embeddings ? one : 2 * one;
}

std::uint64_t count_params(const ArchDescriptor& arch, bool include_embeddings) {
  arch.validate();
  const std::uint64_t attn_width = arch.n_heads * arch.head_dim;
  const std::uint64_t per_layer =
      4 * arch.d_model * attn_width + ffn_matrices(arch.ffn_kind) * arch.d_model * arch.ffn_dim;
  std::uint64_t total = arch.n_layers * per_layer;
  if (include_embeddings) total += embedding_params(arch);
  return total;
}

double layer_flops_per_token(const ArchDescriptor& arch) {
  arch.validate();
  const double d = static_cast<double>(arch.d_model);
  const double heads = static_cast<double>(arch.n_heads);
  const double width = heads * static_cast<double>(arch.head_dim);
  const double seq = static_cast<double>(arch.seq_len);
  const double ffn = static_cast<double>(arch.ffn_dim);
  const double k = static_cast<double>(ffn_matrices(arch.ffn_kind));

  const double qkv = 2.0 * 3.0 * d * width;
  const double logits = 2.0 * seq * width;
  const double softmax = 3.0 * heads * seq;
  const double mix = 2.0 * seq * width;
  const double out_proj = 2.0 * width * d;
  const double mlp = 2.0 * k * d * ffn;
  return qkv + logits + softmax + mix + out_proj + mlp;
}

double flops_per_token(const ArchDescriptor& arch, bool include_embeddings) {
  double total = static_cast<double>(arch.n_layers) * layer_flops_per_token(arch);
  if (include_embeddings) {
    const double vd = static_cast<double>(arch.vocab) * static_cast<double>(arch.d_model);
    total += 2.0 * vd;  // input embedding
    total += 2.0 * vd;  // final logits
  }
  return total;
}

std::uint64_t six_nd(std::uint64_t n, std::uint64_t d) {
  constexpr auto limit = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
  std::uint64_t nd = 0, out = 0;
  if (__builtin_mul_overflow(n, d, &nd) || __builtin_mul_overflow(nd, std::uint64_t{6}, &out) ||
      out > limit)
    throw OverflowError(fmt::format("6*N*D overflows for N={} D={}", n, d));
  return out;
}

double six_nd_real(std::uint64_t n, std::uint64_t d) {
  unsigned __int128 nd = static_cast<unsigned __int128>(n) * d;
  unsigned __int128 out = 0;
  if (__builtin_mul_overflow(nd, static_cast<unsigned __int128>(6), &out))
    throw OverflowError(fmt::format("6*N*D overflows 128 bits for N={} D={}", n, d));
  return static_cast<double>(out);
}

double training_flops(const ArchDescriptor& arch, std::uint64_t d_tokens, const CountingPolicy& policy) {
  if (d_tokens < 1) throw DomainError("token count must be at least 1");
  if (policy.flop_method == FlopMethod::six_nd)
    return six_nd_real(count_params(arch, policy.embeddings_in_n), d_tokens);
  return 3.0 * flops_per_token(arch, policy.embeddings_in_c) * static_cast<double>(d_tokens);
}

ComputeAnnotatedDataset annotate_compute(const Dataset& ds, const CountingPolicy& policy,
                                         const ArchTable& arch_table) {
  ComputeAnnotatedDataset out;
  out.policy = policy;
  out.label = ds.label + " | counting(" + policy.describe() + ")";
  out.records.reserve(ds.size());
  const NConvention conv = policy.embeddings_in_n ? NConvention::total : NConvention::nonembed;
  for (const auto& r : ds.records) {
    AnnotatedRecord a;
    a.record = r;
    const std::uint64_t n = r.n(conv);
    a.n = static_cast<double>(n);
    a.d = static_cast<double>(r.tokens_seen);
    if (policy.flop_method == FlopMethod::six_nd) {
      a.c = six_nd_real(n, r.tokens_seen);
    } else {
      if (!r.arch_id)
        throw MissingArch("record " + r.key() + " has no arch_id; detailed FLOP counting needs one");
      const auto& arch = lookup_arch(arch_table, *r.arch_id);
      a.c = 3.0 * flops_per_token(arch, policy.embeddings_in_c) * a.d;
    }
    out.records.push_back(std::move(a));
  }
  return out;
}

const ArchDescriptor& lookup_arch(const ArchTable& table, const std::string& arch_id) {
  auto it = table.find(arch_id);
  if (it == table.end()) throw UnknownArch("unknown arch_id '" + arch_id + "'");
  return it->second;
}

ArchTable parse_arch_table(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("arch table is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("arch table must map arch_id to a descriptor");
  ArchTable table;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto& v = it.value();
    auto count = [&](const char* field) -> std::uint64_t {
      if (!v.contains(field) || !v[field].is_number_integer())
        throw SchemaError(fmt::format("arch '{}': field '{}' must be an integer", it.key(), field));
      auto x = v[field].get<std::int64_t>();
      if (x < 1) throw SchemaError(fmt::format("arch '{}': field '{}' must be >= 1", it.key(), field));
      return static_cast<std::uint64_t>(x);
    };
    ArchDescriptor a;
    a.n_layers = count("n_layers");
    a.d_model = count("d_model");
    a.n_heads = count("n_heads");
    a.head_dim = count("head_dim");
    a.ffn_dim = count("ffn_dim");
    a.vocab = count("vocab");
    a.seq_len = count("seq_len");
    a.ffn_kind = parse_ffn_kind(v.value("ffn_kind", std::string("two_matrix")));
    a.tied_embeddings = v.value("tied_embeddings", false);
    table.emplace(it.key(), a);
  }
  return table;
}

ArchTable load_arch_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open arch table '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_arch_table(buf.str());
}

std::string to_string(FfnKind k) {
  return k == FfnKind::two_matrix ? "two_matrix" : "gated_three_matrix";
}

FfnKind parse_ffn_kind(std::string_view name) {
  if (name == "two_matrix") return FfnKind::two_matrix;
  if (name == "gated_three_matrix") return FfnKind::gated_three_matrix;
  throw SchemaError("unknown ffn_kind '" + std::string(name) + "'");
}

std::string to_string(FlopMethod m) { return m == FlopMethod::detailed ? "detailed" : "six_nd"; }

FlopMethod parse_flop_method(std::string_view name) {
  if (name == "detailed") return FlopMethod::detailed;
  if (name == "six_nd") return FlopMethod::six_nd;
  throw ConfigError("unknown flop_method '" + std::string(name) + "'");
}

}  // namespace lawlab
