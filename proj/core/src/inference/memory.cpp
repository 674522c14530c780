#include "kraken/inference/memory.hpp"

#include <sstream>

#include "kraken/numerics/errors.hpp"

namespace kraken::inference {
namespace {

// Number of K (equivalently V) heads.
std::uint64_t kv_heads(const ModelConfig& c, AttentionVariant attn) {
  switch (attn.kind) {
    case AttentionVariant::Kind::MHA: return c.heads;
    case AttentionVariant::Kind::MQA: return 1;
    case AttentionVariant::Kind::GQA:
      if (attn.groups == 0 || attn.groups > c.heads || c.heads % attn.groups != 0) {
        throw ConfigError("GQA groups " + std::to_string(attn.groups) + " must divide " +
                          std::to_string(c.heads) + " heads");
      }
      return attn.groups;
  }
  return c.heads;
}

std::uint64_t kv_width(const ModelConfig& c, AttentionVariant attn) {
  if (attn.kind == AttentionVariant::Kind::MHA) return c.d_model;
  return kv_heads(c, attn) * c.head_dim();
}

}  // namespace

std::string to_string(AttentionVariant attn) {
  switch (attn.kind) {
    case AttentionVariant::Kind::MHA: return "mha";
    case AttentionVariant::Kind::MQA: return "mqa";
    case AttentionVariant::Kind::GQA: return "gqa" + std::to_string(attn.groups);
  }
  return "unknown";
}

std::uint64_t kv_bytes(const ModelConfig& config, AttentionVariant attn, std::uint64_t batch,
                       std::uint64_t seqlen, std::uint64_t dtype_size) {
  config.validate();
  if (seqlen > config.context) {
    throw CapacityError("seqlen " + std::to_string(seqlen) + " exceeds context " +
                        std::to_string(config.context));
  }
  return 2 * batch * seqlen * kv_width(config, attn) * config.parallelism * dtype_size;
}

std::uint64_t layer_weight_params(const ModelConfig& config, AttentionVariant attn) {
  const std::uint64_t d = config.d_model;
  const std::uint64_t qkv_cols = d + 2 * kv_width(config, attn);
  const std::uint64_t sublayer = d * qkv_cols + d * d + 2 * d * config.ffn_hidden();
  return config.parallelism * sublayer;
}

std::vector<MemoryRow> layer_memory_report(std::span<const NamedConfig> configs,
                                           std::uint64_t batch, std::uint64_t seqlen,
                                           std::uint64_t dtype_size) {
  std::vector<MemoryRow> rows;
  for (const auto& nc : configs) {
    std::vector<AttentionVariant> variants{AttentionVariant::mha()};
    if (nc.config.arch == Arch::Kraken) variants.push_back(AttentionVariant::mqa());
    for (auto attn : variants) {
      MemoryRow r;
      r.config = nc.name;
      r.arch = nc.config.arch;
      r.parallelism = nc.config.parallelism;
      r.attn = attn;
      r.batch = batch;
      r.seqlen = seqlen;
      r.dtype_size = dtype_size;
      r.weight_bytes = layer_weight_params(nc.config, attn) * dtype_size;
      r.kv_bytes = kv_bytes(nc.config, attn, batch, seqlen, dtype_size);
      r.total_bytes = r.weight_bytes + r.kv_bytes;
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

std::string memory_report_csv(std::span<const MemoryRow> rows) {
  std::ostringstream out;
  out << "config,arch,parallelism,attn_kind,batch,seqlen,dtype_size,weight_bytes,kv_bytes,"
         "total_bytes\n";
  for (const auto& r : rows) {
    out << r.config << ',' << kraken::to_string(r.arch) << ',' << r.parallelism << ','
        << to_string(r.attn) << ',' << r.batch << ',' << r.seqlen << ',' << r.dtype_size << ','
        << r.weight_bytes << ',' << r.kv_bytes << ',' << r.total_bytes << '\n';
  }
  return out.str();
}

}  // namespace kraken::inference
