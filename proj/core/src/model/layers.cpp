#include "kraken/model/layers.hpp"

#include <cmath>
#include <vector>

#include "kraken/numerics/errors.hpp"

namespace kraken {

LayerVars bind_layer(Tape& tape, const LayerWeights& w, const std::string& prefix) {
  LayerVars v;
  v.w_qkv = tape.parameter(prefix + "w_qkv", w.w_qkv);
  v.b_qkv = tape.parameter(prefix + "b_qkv", w.b_qkv);
  v.w_o = tape.parameter(prefix + "w_o", w.w_o);
  v.b_o = tape.parameter(prefix + "b_o", w.b_o);
  v.w1 = tape.parameter(prefix + "w1", w.w1);
  v.b1 = tape.parameter(prefix + "b1", w.b1);
  v.w2 = tape.parameter(prefix + "w2", w.w2);
  v.b2 = tape.parameter(prefix + "b2", w.b2);
  v.ln1 = {tape.parameter(prefix + "ln1.gain", w.ln1.gain),
           tape.parameter(prefix + "ln1.bias", w.ln1.bias)};
  v.ln2 = {tape.parameter(prefix + "ln2.gain", w.ln2.gain),
           tape.parameter(prefix + "ln2.bias", w.ln2.bias)};
  return v;
}

Var apply_layer_norm(Tape& tape, Var x, const LayerNormVars& ln) {
  return tape.layer_norm(x, ln.gain, ln.bias);
}

Var attention_heads(Tape& tape, Var x, Var w_qkv, Var b_qkv, std::size_t heads,
                    AttentionCache* cache) {
  const std::size_t width = tape.value(w_qkv).cols() / 3;
  if (heads == 0 || width % heads != 0) {
    throw DimensionError("attention width " + std::to_string(width) + " not divisible by " +
                         std::to_string(heads) + " heads");
  }
  const std::size_t head_dim = width / heads;
  const std::size_t len = tape.value(x).rows();

  Var qkv = tape.add_bias(tape.matmul(x, w_qkv), b_qkv);
  Var q = tape.slice_cols(qkv, 0, width);
  Var k = tape.slice_cols(qkv, width, width);
  Var v = tape.slice_cols(qkv, 2 * width, width);

  std::size_t offset = 0;
  if (cache != nullptr) {
    if (cache->width != width) {
      throw ConfigError("kv cache width " + std::to_string(cache->width) +
                        " does not match attention width " + std::to_string(width));
    }
    offset = cache->length();
    if (offset + len > cache->capacity) {
      throw CapacityError("kv cache capacity " + std::to_string(cache->capacity) +
                          " exceeded: " + std::to_string(offset) + " cached + " +
                          std::to_string(len) + " new");
    }
    const Tensor new_keys = tape.value(k);
    const Tensor new_values = tape.value(v);
    if (offset > 0) {
      const Var ks[] = {tape.constant(cache->keys), k};
      const Var vs[] = {tape.constant(cache->values), v};
      k = tape.concat_rows(ks);
      v = tape.concat_rows(vs);
      const Tensor kparts[] = {cache->keys, new_keys};
      const Tensor vparts[] = {cache->values, new_values};
      cache->keys = ops::concat_rows(kparts);
      cache->values = ops::concat_rows(vparts);
    } else {
      cache->keys = new_keys;
      cache->values = new_values;
    }
  }

  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Var> outputs;
  outputs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = tape.slice_cols(q, h * head_dim, head_dim);
    Var kh = tape.slice_cols(k, h * head_dim, head_dim);
    Var vh = tape.slice_cols(v, h * head_dim, head_dim);
    Var scores = tape.scale(tape.matmul_bt(qh, kh), inv_sqrt);
    Var probs = tape.causal_softmax_rows(scores, offset);
    outputs.push_back(tape.matmul(probs, vh));
  }
  return heads == 1 ? outputs.front() : tape.concat_cols(outputs);
}

Var mha_forward(Tape& tape, Var x, const LayerVars& w, std::size_t heads, AttentionCache* cache) {
  Var attn = attention_heads(tape, x, w.w_qkv, w.b_qkv, heads, cache);
  return tape.add_bias(tape.matmul(attn, w.w_o), w.b_o);
}

Var ffn_forward(Tape& tape, Var x, const LayerVars& w) {
  Var hidden = tape.gelu(tape.add_bias(tape.matmul(x, w.w1), w.b1));
  return tape.add_bias(tape.matmul(hidden, w.w2), w.b2);
}

Var standard_layer_forward(Tape& tape, Var x, const LayerVars& w, std::size_t heads,
                           AttentionCache* cache) {
  Var x1 = tape.add(x, mha_forward(tape, apply_layer_norm(tape, x, w.ln1), w, heads, cache));
  return tape.add(x1, ffn_forward(tape, apply_layer_norm(tape, x1, w.ln2), w));
}

Var parallel_block_forward(Tape& tape, Var x, const LayerVars& w, std::size_t heads,
                           AttentionCache* cache) {
  Var attn = mha_forward(tape, apply_layer_norm(tape, x, w.ln1), w, heads, cache);
  Var ffn = ffn_forward(tape, apply_layer_norm(tape, x, w.ln2), w);
  return tape.add(tape.add(x, attn), ffn);
}

Var kraken_sublayer_forward(Tape& tape, Var x, Var y_reduced, const LayerVars& w,
                            std::size_t heads, AttentionCache* cache, SublayerRecord* record) {
  if (tape.value(x).shape() != tape.value(y_reduced).shape()) {
    throw DimensionError("kraken sub-layer: input " + to_string(tape.value(x).shape()) +
                         " and reduced " + to_string(tape.value(y_reduced).shape()) + " differ");
  }
  Var residual = x;
  Var attn = mha_forward(tape, apply_layer_norm(tape, x, w.ln1), w, heads, cache);
  Var x1 = tape.add(residual, attn);
  residual = x1;
  Var ffn_in = apply_layer_norm(tape, tape.add(x1, y_reduced), w.ln2);
  Var out = tape.add(residual, ffn_forward(tape, ffn_in, w));
  if (record != nullptr) {
    record->input = tape.value(x);
    record->reduced = tape.value(y_reduced);
    record->attention = tape.value(attn);
    record->output = tape.value(out);
  }
  return out;
}

Tensor mha_forward(const Tensor& x, const LayerWeights& w, std::size_t heads,
                   AttentionCache* cache) {
  Tape tape(Tape::Mode::Inference);
  const LayerVars v = bind_layer(tape, w, "");
  return tape.value(mha_forward(tape, tape.constant(x), v, heads, cache));
}

Tensor ffn_forward(const Tensor& x, const LayerWeights& w) {
  Tape tape(Tape::Mode::Inference);
  const LayerVars v = bind_layer(tape, w, "");
  return tape.value(ffn_forward(tape, tape.constant(x), v));
}

Tensor standard_layer_forward(const Tensor& x, const LayerWeights& w, std::size_t heads) {
  Tape tape(Tape::Mode::Inference);
  const LayerVars v = bind_layer(tape, w, "");
  return tape.value(standard_layer_forward(tape, tape.constant(x), v, heads));
}

Tensor parallel_block_forward(const Tensor& x, const LayerWeights& w, std::size_t heads) {
  Tape tape(Tape::Mode::Inference);
  const LayerVars v = bind_layer(tape, w, "");
  return tape.value(parallel_block_forward(tape, tape.constant(x), v, heads));
}

Tensor kraken_sublayer_forward(const Tensor& x, const Tensor& y_reduced, const LayerWeights& w,
                               std::size_t heads, AttentionCache* cache) {
  Tape tape(Tape::Mode::Inference);
  const LayerVars v = bind_layer(tape, w, "");
  return tape.value(
      kraken_sublayer_forward(tape, tape.constant(x), tape.constant(y_reduced), v, heads, cache));
}

}  // namespace kraken
