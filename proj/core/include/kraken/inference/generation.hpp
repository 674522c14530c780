#pragma once

#include <span>
#include <vector>

#include "kraken/inference/kv_cache.hpp"
#include "kraken/model/weights.hpp"

namespace kraken::inference {

struct PrefillResult {
  Tensor logits_last;  // [V]
  KVCache cache;
};

// Runs the prompt through the model once, filling a fresh cache.
PrefillResult prefill(const ModelWeights& weights, std::span<const int> tokens);

// Appends one position to `cache` and returns its logits [V]. Throws
// CapacityError when the cache already holds `context` positions.
Tensor decode_step(const ModelWeights& weights, KVCache& cache, int token);

// Prefill followed by `steps` greedy decode steps; returns generated ids.
std::vector<int> generate_greedy(const ModelWeights& weights, std::span<const int> prompt,
                                 std::size_t steps);

// Throws ConfigError if the cache layout does not belong to the config.
void check_cache(const ModelConfig& config, const KVCache& cache);

}  // namespace kraken::inference
