#include "kraken/inference/generation.hpp"

#include <algorithm>

#include "kraken/model/forward.hpp"
#include "kraken/numerics/errors.hpp"
#include "kraken/numerics/ops.hpp"

namespace kraken::inference {
namespace {

Tensor last_row(const Tensor& logits) {
  const auto row = logits.row(logits.rows() - 1);
  return Tensor({row.size()}, std::vector<double>(row.begin(), row.end()));
}

int argmax(const Tensor& v) {
  const auto d = v.data();
  return static_cast<int>(std::max_element(d.begin(), d.end()) - d.begin());
}

}  // namespace

void check_cache(const ModelConfig& config, const KVCache& cache) {
  if (cache.entries.size() != config.layers) {
    throw ConfigError("kv cache has " + std::to_string(cache.entries.size()) +
                      " layers, model has " + std::to_string(config.layers));
  }
  const std::size_t columns = config.arch == Arch::Kraken ? config.parallelism : 1;
  for (const auto& row : cache.entries) {
    if (row.size() != columns)
      throw ConfigError("kv cache column count does not match model parallelism");
    for (const auto& e : row) {
      if (e.width != config.d_model) throw ConfigError("kv cache width does not match d_model");
      if (e.capacity != config.context)
        throw ConfigError("kv cache capacity does not match context");
    }
  }
}

PrefillResult prefill(const ModelWeights& weights, std::span<const int> tokens) {
  PrefillResult result{Tensor{}, make_kv_cache(weights.config)};
  ForwardOptions options;
  options.cache = &result.cache;
  result.logits_last = last_row(model_forward(weights, tokens, options));
  return result;
}

Tensor decode_step(const ModelWeights& weights, KVCache& cache, int token) {
  check_cache(weights.config, cache);
  if (cache.cur_len() >= cache.capacity) {
    throw CapacityError("kv cache full: " + std::to_string(cache.cur_len()) + " of " +
                        std::to_string(cache.capacity) + " positions used");
  }
  ForwardOptions options;
  options.cache = &cache;
  const int one[] = {token};
  return last_row(model_forward(weights, one, options));
}

std::vector<int> generate_greedy(const ModelWeights& weights, std::span<const int> prompt,
                                 std::size_t steps) {
  std::vector<int> out;
  if (steps == 0) return out;
  auto state = prefill(weights, prompt);
  out.push_back(argmax(state.logits_last));
  while (out.size() < steps) out.push_back(argmax(decode_step(weights, state.cache, out.back())));
  return out;
}

}  // namespace kraken::inference
