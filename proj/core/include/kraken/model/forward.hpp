#pragma once

#include <functional>
#include <span>
#include <vector>

#include "kraken/inference/kv_cache.hpp"
#include "kraken/model/layers.hpp"
#include "kraken/model/weights.hpp"
#include "kraken/numerics/tape.hpp"

namespace kraken {

// records[layer][device]
struct ActivationTrace {
  std::vector<std::vector<SublayerRecord>> records;
};

// Replaces a sub-layer's output before anything downstream reads it.
using OutputOverride = std::function<void(std::size_t layer, std::size_t device, Tensor& output)>;

struct ForwardOptions {
  ActivationTrace* trace = nullptr;
  KVCache* cache = nullptr;
  OutputOverride override_output;
};

struct ModelVars {
  Var embeddings, positional;
  std::vector<std::vector<LayerVars>> layers;
  Var w_concat, b_concat;
  LayerNormVars final_ln;
};

ModelVars bind_model(Tape& tape, const ModelWeights& weights);

// Throws DimensionError for out-of-range ids and CapacityError when the
// sequence (plus cached history) exceeds the context length.
void check_tokens(const ModelConfig& config, std::span<const int> tokens, std::size_t offset);

// Full forward pass on a tape; returns l x V logits.
Var forward_logits(Tape& tape, const ModelVars& vars, const ModelConfig& config,
                   std::span<const int> tokens, const ForwardOptions& options = {});

Tensor model_forward(const ModelWeights& weights, std::span<const int> tokens,
                     const ForwardOptions& options = {});

// Width of the per-sub-layer KV cache entries for a config.
KVCache make_kv_cache(const ModelConfig& config);

}  // namespace kraken
