#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lawlab/run_ledger.hpp"

namespace lawlab {

enum class FfnKind { two_matrix, gated_three_matrix };

/// Decoder-only transformer shape. n_heads * head_dim may differ from
/// d_model; the Q/K/V/O projections absorb the mismatch.
struct ArchDescriptor {
  std::uint64_t n_layers = 1;
  std::uint64_t d_model = 1;
  std::uint64_t n_heads = 1;
  std::uint64_t head_dim = 1;
  std::uint64_t ffn_dim = 1;
  std::uint64_t vocab = 1;
  std::uint64_t seq_len = 1;
  FfnKind ffn_kind = FfnKind::two_matrix;
  bool tied_embeddings = false;

  void validate() const;  // throws DomainError
};

using ArchTable = std::map<std::string, ArchDescriptor>;

enum class FlopMethod { detailed, six_nd };

struct CountingPolicy {
  bool embeddings_in_n = true;
  bool embeddings_in_c = true;
  FlopMethod flop_method = FlopMethod::six_nd;

  std::string describe() const;
};

/// Weight-matrix parameter count: Q/K/V/O and FFN matrices per layer, plus
/// the input embedding and (when untied) the output projection.
std::uint64_t count_params(const ArchDescriptor& arch, bool include_embeddings);

/// Embedding-matrix parameters alone: vocab*d, doubled when untied.
std::uint64_t embedding_params(const ArchDescriptor& arch);

/// Forward-pass FLOPs per token. Excluding embeddings drops both the input
/// embedding and the final logits terms.
double flops_per_token(const ArchDescriptor& arch, bool include_embeddings);

/// Per-layer forward FLOPs per token (attention + FFN).
double layer_flops_per_token(const ArchDescriptor& arch);

/// Exact 6*N*D. Throws OverflowError past INT64_MAX.
std::uint64_t six_nd(std::uint64_t n, std::uint64_t d);

/// 6*N*D as a real: the exact 128-bit product, rounded once. Throws
/// OverflowError only when the product exceeds 128 bits.
double six_nd_real(std::uint64_t n, std::uint64_t d);

/// Training compute C. six_nd ignores `arch` beyond N; detailed is
/// 3 * flops_per_token * D (backward costs twice the forward pass).
double training_flops(const ArchDescriptor& arch, std::uint64_t d_tokens, const CountingPolicy& policy);

struct AnnotatedRecord {
  RunRecord record;
  double n = 0.0;  ///< N under the policy's embedding convention
  double d = 0.0;  ///< tokens_seen
  double c = 0.0;  ///< training compute under the policy
};

struct ComputeAnnotatedDataset {
  std::vector<AnnotatedRecord> records;
  std::string label;
  CountingPolicy policy;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
};

/// Joins records to compute. N always comes from the record's own counts;
/// C uses the arch table only under the detailed method.
ComputeAnnotatedDataset annotate_compute(const Dataset& ds, const CountingPolicy& policy,
                                         const ArchTable& arch_table);

ArchTable load_arch_table(const std::string& path);
ArchTable parse_arch_table(std::string_view json_text);
const ArchDescriptor& lookup_arch(const ArchTable& table, const std::string& arch_id);

std::string to_string(FfnKind k);
FfnKind parse_ffn_kind(std::string_view name);
std::string to_string(FlopMethod m);
FlopMethod parse_flop_method(std::string_view name);

}  // namespace lawlab
