#pragma once

#include <span>
#include <vector>

#include "kraken/model/weights.hpp"
#include "kraken/parallel/device_group.hpp"

namespace kraken::parallel {

// Per-device slice of one layer. Attention heads are split into contiguous
// groups (matching columns of each of the Q, K and V blocks, rows of w_o);
// the feed-forward hidden dimension is split across w1 columns / w2 rows.
struct StandardShard {
  Tensor w_qkv, b_qkv;
  Tensor w_o;
  Tensor w1, b1;
  Tensor w2;
};

// Parameters every device holds in full.
struct ReplicatedLayer {
  Tensor b_o, b2;
  LayerNormParams ln1, ln2;
};

struct ShardedStandardWeights {
  ModelConfig config;
  std::size_t devices = 1;
  std::vector<std::vector<StandardShard>> shards;  // [layer][device]
  std::vector<ReplicatedLayer> replicated;         // [layer]
  Tensor embeddings, positional;
  LayerNormParams final_ln;
};

// Accepts Standard and ParallelBlock weights. Throws ConfigError naming the
// dimension that is not divisible by n.
ShardedStandardWeights shard_standard(const ModelWeights& weights, std::size_t n);
ModelWeights reconstruct(const ShardedStandardWeights& sharded);

// Standard: two AllReduce per layer. ParallelBlock: one AllReduce per layer
// (attention and feed-forward partials are summed locally first).
Tensor run_sharded_standard(std::span<const int> tokens, const ShardedStandardWeights& weights,
                            DeviceGroup& group);

}  // namespace kraken::parallel
