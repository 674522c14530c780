#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kraken/model/config.hpp"
#include "kraken/numerics/rng.hpp"
#include "kraken/numerics/tensor.hpp"

namespace kraken {

struct LayerNormParams {
  Tensor gain;
  Tensor bias;

  static LayerNormParams identity(std::size_t d) {
    return {Tensor({d}, 1.0), Tensor({d}, 0.0)};
  }
};

// Weights of one attention + feed-forward block, in x * W row convention:
// w_qkv is d x 3*width with the Q, K and V blocks side by side.
struct LayerWeights {
  Tensor w_qkv, b_qkv;
  Tensor w_o, b_o;
  Tensor w1, b1;
  Tensor w2, b2;
  LayerNormParams ln1, ln2;

  static LayerWeights zeros(std::size_t d, std::size_t hidden);
};

// Full parameter bundle. layers[i][k] is sub-layer k of layer i; non-Kraken
// models have exactly one column. The unembedding is tied to `embeddings`.
struct ModelWeights {
  ModelConfig config;
  Tensor embeddings;  // vocab x d
  Tensor positional;  // context x d
  std::vector<std::vector<LayerWeights>> layers;
  Tensor w_concat, b_concat;  // (d*N) x d and d; Kraken only
  LayerNormParams final_ln;
};

inline constexpr double kInitStd = 0.02;

// Normal(0.02) init; the residual-feeding projections w_o and w2 use
// 0.02/sqrt(L*N); biases zero; LayerNorm gains one; w_concat is a vertical
// stack of N copies of I/N.
ModelWeights init_weights(const ModelConfig& config, const Rng& rng);

// Visits every parameter tensor with a stable, unique name.
void for_each_parameter(ModelWeights& weights,
                        const std::function<void(const std::string&, Tensor&)>& fn);
void for_each_parameter(const ModelWeights& weights,
                        const std::function<void(const std::string&, const Tensor&)>& fn);

std::string layer_prefix(std::size_t layer, std::size_t device);

// Throws ConfigError if any tensor shape disagrees with weights.config.
void check_shapes(const ModelWeights& weights);

}  // namespace kraken
