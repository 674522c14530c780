#pragma once

#include <cstddef>
#include <string>

#include "kraken/inference/kv_cache.hpp"
#include "kraken/model/weights.hpp"
#include "kraken/numerics/tape.hpp"

namespace kraken {

struct LayerNormVars {
  Var gain, bias;
};

struct LayerVars {
  Var w_qkv, b_qkv, w_o, b_o, w1, b1, w2, b2;
  LayerNormVars ln1, ln2;
};

// Binds every tensor of `w` as a named parameter on the tape.
LayerVars bind_layer(Tape& tape, const LayerWeights& w, const std::string& prefix);

Var apply_layer_norm(Tape& tape, Var x, const LayerNormVars& ln);

// Causal multi-head attention up to (but excluding) the output projection:
// returns the l x width concatenation of per-head softmax(QK^T/sqrt(h))V.
// With a cache, new keys/values are appended and queries attend over the
// whole history.
Var attention_heads(Tape& tape, Var x, Var w_qkv, Var b_qkv, std::size_t heads,
                    AttentionCache* cache = nullptr);

Var mha_forward(Tape& tape, Var x, const LayerVars& w, std::size_t heads,
                AttentionCache* cache = nullptr);
Var ffn_forward(Tape& tape, Var x, const LayerVars& w);

// x1 = x + MHA(LN1(x)); out = x1 + FFN(LN2(x1))
Var standard_layer_forward(Tape& tape, Var x, const LayerVars& w, std::size_t heads,
                           AttentionCache* cache = nullptr);
// out = x + MHA(LN1(x)) + FFN(LN2(x))
Var parallel_block_forward(Tape& tape, Var x, const LayerVars& w, std::size_t heads,
                           AttentionCache* cache = nullptr);

// Locals of one sub-layer evaluation.
struct SublayerRecord {
  Tensor input;      // x
  Tensor reduced;    // y, the AllReduce output (x itself in the first layer)
  Tensor attention;  // MHA(LN1(x)), before the residual add
  Tensor output;
};

// residual = x; x1 = residual + MHA(LN1(x)); out = x1 + FFN(LN2(x1 + y)).
// The attention path never reads y_reduced.
Var kraken_sublayer_forward(Tape& tape, Var x, Var y_reduced, const LayerVars& w,
                            std::size_t heads, AttentionCache* cache = nullptr,
                            SublayerRecord* record = nullptr);

// Tensor-level conveniences that run on a private inference tape.
Tensor mha_forward(const Tensor& x, const LayerWeights& w, std::size_t heads,
                   AttentionCache* cache = nullptr);
Tensor ffn_forward(const Tensor& x, const LayerWeights& w);
Tensor standard_layer_forward(const Tensor& x, const LayerWeights& w, std::size_t heads);
Tensor parallel_block_forward(const Tensor& x, const LayerWeights& w, std::size_t heads);
Tensor kraken_sublayer_forward(const Tensor& x, const Tensor& y_reduced, const LayerWeights& w,
                               std::size_t heads, AttentionCache* cache = nullptr);

}  // namespace kraken
