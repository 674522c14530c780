#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kraken/model/config.hpp"

namespace kraken::inference {

// MHA: one K/V head per query head. MQA: one shared K/V head. GQA: `groups`
// K/V heads.
struct AttentionVariant {
  enum class Kind { MHA, MQA, GQA };
  Kind kind = Kind::MHA;
  std::size_t groups = 0;

  static AttentionVariant mha() { return {Kind::MHA, 0}; }
  static AttentionVariant mqa() { return {Kind::MQA, 0}; }
  static AttentionVariant gqa(std::size_t g) { return {Kind::GQA, g}; }
};

std::string to_string(AttentionVariant attn);

inline constexpr std::size_t kHalfPrecisionBytes = 2;

// Per-layer KV cache bytes: 2 * batch * seqlen * kv_width * N * dtype_size
// with kv_width = d (MHA), d/heads (MQA) or groups * d/heads (GQA).
std::uint64_t kv_bytes(const ModelConfig& config, AttentionVariant attn, std::uint64_t batch,
                       std::uint64_t seqlen, std::uint64_t dtype_size = kHalfPrecisionBytes);

// Bias-free per-layer parameter count with K/V projections narrowed to the
// attention variant.
std::uint64_t layer_weight_params(const ModelConfig& config, AttentionVariant attn);

struct MemoryRow {
  std::string config;
  Arch arch = Arch::Standard;
  std::size_t parallelism = 1;
  AttentionVariant attn;
  std::uint64_t batch = 0, seqlen = 0, dtype_size = 0;
  std::uint64_t weight_bytes = 0;
  std::uint64_t kv_bytes = 0;
  std::uint64_t total_bytes = 0;  // weight_bytes + kv_bytes; activations excluded
};

struct NamedConfig {
  std::string name;
  ModelConfig config;
};

// Standard configs contribute an MHA row; Kraken configs an MHA and an MQA row.
std::vector<MemoryRow> layer_memory_report(std::span<const NamedConfig> configs,
                                           std::uint64_t batch, std::uint64_t seqlen,
                                           std::uint64_t dtype_size = kHalfPrecisionBytes);

// Header: config,arch,parallelism,attn_kind,batch,seqlen,dtype_size,weight_bytes,kv_bytes,total_bytes
std::string memory_report_csv(std::span<const MemoryRow> rows);

}  // namespace kraken::inference
