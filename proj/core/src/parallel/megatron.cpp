#include "kraken/parallel/megatron.hpp"

#include "kraken/model/forward.hpp"
#include "kraken/model/layers.hpp"
#include "kraken/numerics/errors.hpp"
#include "kraken/numerics/ops.hpp"
#include "kraken/numerics/tape.hpp"

namespace kraken::parallel {
namespace {

Tensor as_row(const Tensor& v) { return Tensor({1, v.size()}, std::vector<double>(v.data().begin(), v.data().end())); }

Tensor as_vector(const Tensor& row) {
  return Tensor({row.size()}, std::vector<double>(row.data().begin(), row.data().end()));
}

Tensor slice_vector(const Tensor& v, std::size_t start, std::size_t count) {
  return as_vector(ops::slice_cols(as_row(v), start, count));
}

Tensor concat_vectors(std::span<const Tensor> parts) {
  std::vector<Tensor> rows;
  for (const auto& p : parts) rows.push_back(as_row(p));
  return as_vector(ops::concat_cols(rows));
}

// Q, K and V column blocks for one head group.
Tensor qkv_cols(const Tensor& w, std::size_t d, std::size_t start, std::size_t count) {
  const Tensor parts[] = {ops::slice_cols(w, start, count), ops::slice_cols(w, d + start, count),
                          ops::slice_cols(w, 2 * d + start, count)};
  return ops::concat_cols(parts);
}

Tensor qkv_bias(const Tensor& b, std::size_t d, std::size_t start, std::size_t count) {
  const Tensor parts[] = {slice_vector(b, start, count), slice_vector(b, d + start, count),
                          slice_vector(b, 2 * d + start, count)};
  return concat_vectors(parts);
}

}  // namespace

ShardedStandardWeights shard_standard(const ModelWeights& weights, std::size_t n) {
  const auto& c = weights.config;
  if (c.arch == Arch::Kraken) throw ConfigError("shard_standard expects a non-Kraken model");
  c.validate_for_numerics();
  if (n == 0) throw ConfigError("device count must be >= 1");
  if (c.heads % n != 0) {
    throw ConfigError("heads (" + std::to_string(c.heads) + ") not divisible by " +
                      std::to_string(n) + " devices");
  }
  if (c.ffn_hidden() % n != 0) {
    throw ConfigError("ffn hidden dimension (" + std::to_string(c.ffn_hidden()) +
                      ") not divisible by " + std::to_string(n) + " devices");
  }
  const std::size_t d = c.d_model;
  const std::size_t width = d / n;
  const std::size_t hidden = c.ffn_hidden() / n;

  ShardedStandardWeights s;
  s.config = c;
  s.devices = n;
  s.embeddings = weights.embeddings;
  s.positional = weights.positional;
  s.final_ln = weights.final_ln;
  for (const auto& column : weights.layers) {
    const LayerWeights& lw = column.front();
    s.replicated.push_back({lw.b_o, lw.b2, lw.ln1, lw.ln2});
    std::vector<StandardShard> layer;
    for (std::size_t k = 0; k < n; ++k) {
      StandardShard sh;
      sh.w_qkv = qkv_cols(lw.w_qkv, d, k * width, width);
      sh.b_qkv = qkv_bias(lw.b_qkv, d, k * width, width);
      sh.w_o = ops::slice_rows(lw.w_o, k * width, width);
      sh.w1 = ops::slice_cols(lw.w1, k * hidden, hidden);
      sh.b1 = slice_vector(lw.b1, k * hidden, hidden);
      sh.w2 = ops::slice_rows(lw.w2, k * hidden, hidden);
      layer.push_back(std::move(sh));
    }
    s.shards.push_back(std::move(layer));
  }
  return s;
}

ModelWeights reconstruct(const ShardedStandardWeights& s) {
  ModelWeights w;
  w.config = s.config;
  w.embeddings = s.embeddings;
  w.positional = s.positional;
  w.final_ln = s.final_ln;
  for (std::size_t i = 0; i < s.shards.size(); ++i) {
    const auto& layer = s.shards[i];
    std::vector<Tensor> q, k, v, bq, bk, bv, wo, w1, b1, w2;
    for (const auto& sh : layer) {
      const std::size_t width = sh.w_o.rows();
      q.push_back(ops::slice_cols(sh.w_qkv, 0, width));
      k.push_back(ops::slice_cols(sh.w_qkv, width, width));
      v.push_back(ops::slice_cols(sh.w_qkv, 2 * width, width));
      bq.push_back(slice_vector(sh.b_qkv, 0, width));
      bk.push_back(slice_vector(sh.b_qkv, width, width));
      bv.push_back(slice_vector(sh.b_qkv, 2 * width, width));
      wo.push_back(sh.w_o);
      w1.push_back(sh.w1);
      b1.push_back(sh.b1);
      w2.push_back(sh.w2);
    }
    LayerWeights lw;
    const Tensor qkv[] = {ops::concat_cols(q), ops::concat_cols(k), ops::concat_cols(v)};
    lw.w_qkv = ops::concat_cols(qkv);
    const Tensor bqkv[] = {concat_vectors(bq), concat_vectors(bk), concat_vectors(bv)};
    lw.b_qkv = concat_vectors(bqkv);
    lw.w_o = ops::concat_rows(wo);
    lw.w1 = ops::concat_cols(w1);
    lw.b1 = concat_vectors(b1);
    lw.w2 = ops::concat_rows(w2);
    lw.b_o = s.replicated[i].b_o;
    lw.b2 = s.replicated[i].b2;
    lw.ln1 = s.replicated[i].ln1;
    lw.ln2 = s.replicated[i].ln2;
    w.layers.push_back({std::move(lw)});
  }
  return w;
}

namespace {

// Partial w_o product of one device's head group.
Tensor attention_partial(const Tensor& x, const LayerNormParams& ln, const StandardShard& sh,
                         std::size_t heads) {
  Tape tape(Tape::Mode::Inference);
  Var normed = tape.layer_norm(tape.constant(x), tape.constant(ln.gain), tape.constant(ln.bias));
  Var attn = attention_heads(tape, normed, tape.constant(sh.w_qkv), tape.constant(sh.b_qkv), heads);
  return ops::matmul(tape.value(attn), sh.w_o);
}

// Partial w2 product of one device's hidden slice.
Tensor ffn_partial(const Tensor& x, const LayerNormParams& ln, const StandardShard& sh) {
  const Tensor normed = ops::layer_norm(x, ln.gain, ln.bias);
  const Tensor hidden = ops::gelu(ops::add_bias(ops::matmul(normed, sh.w1), sh.b1));
  return ops::matmul(hidden, sh.w2);
}

}  // namespace

Tensor run_sharded_standard(std::span<const int> tokens, const ShardedStandardWeights& w,
                            DeviceGroup& group) {
  const auto& c = w.config;
  if (group.size() != w.devices) {
    throw ConfigError("weights sharded for " + std::to_string(w.devices) +
                      " devices, group has " + std::to_string(group.size()));
  }
  check_tokens(c, tokens, 0);
  const std::size_t n = group.size();
  const std::size_t local_heads = c.heads / n;

  std::vector<std::size_t> ids(tokens.begin(), tokens.end());
  std::vector<std::size_t> positions(tokens.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;

  // Replicated residual stream, one copy per device.
  std::vector<Tensor> x(n);
  group.for_each_device([&](std::size_t k) {
    x[k] = ops::add(ops::gather_rows(w.embeddings, ids), ops::gather_rows(w.positional, positions));
  });

  std::vector<Tensor> partial(n);
  for (std::size_t i = 0; i < c.layers; ++i) {
    const auto& rep = w.replicated[i];
    const auto& shards = w.shards[i];
    if (c.arch == Arch::Standard) {
      group.for_each_device(
          [&](std::size_t k) { partial[k] = attention_partial(x[k], rep.ln1, shards[k], local_heads); });
      auto attn = group.all_reduce(partial, i);
      group.for_each_device([&](std::size_t k) {
        x[k] = ops::add(x[k], ops::add_bias(attn[k], rep.b_o));
        partial[k] = ffn_partial(x[k], rep.ln2, shards[k]);
      });
      auto ffn = group.all_reduce(partial, i);
      group.for_each_device(
          [&](std::size_t k) { x[k] = ops::add(x[k], ops::add_bias(ffn[k], rep.b2)); });
    } else {
      group.for_each_device([&](std::size_t k) {
        partial[k] = ops::add(attention_partial(x[k], rep.ln1, shards[k], local_heads),
                              ffn_partial(x[k], rep.ln2, shards[k]));
      });
      auto sum = group.all_reduce(partial, i);
      group.for_each_device([&](std::size_t k) {
        x[k] = ops::add(x[k], ops::add_bias(ops::add_bias(sum[k], rep.b_o), rep.b2));
      });
    }
  }

  std::vector<Tensor> logits(n);
  group.for_each_device([&](std::size_t k) {
    logits[k] = ops::matmul_bt(ops::layer_norm(x[k], w.final_ln.gain, w.final_ln.bias),
                               w.embeddings);
  });
  return logits.front();
}

}  // namespace kraken::parallel
