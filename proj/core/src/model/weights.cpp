#include "kraken/model/weights.hpp"

#include <cmath>

#include "kraken/numerics/errors.hpp"

namespace kraken {

LayerWeights LayerWeights::zeros(std::size_t d, std::size_t hidden) {
  LayerWeights w;
  w.w_qkv = Tensor({d, 3 * d});
  w.b_qkv = Tensor({3 * d});
  w.w_o = Tensor({d, d});
  w.b_o = Tensor({d});
  w.w1 = Tensor({d, hidden});
  w.b1 = Tensor({hidden});
  w.w2 = Tensor({hidden, d});
  w.b2 = Tensor({d});
  w.ln1 = LayerNormParams::identity(d);
  w.ln2 = LayerNormParams::identity(d);
  return w;
}

std::string layer_prefix(std::size_t layer, std::size_t device) {
  return "layers." + std::to_string(layer) + "." + std::to_string(device) + ".";
}

ModelWeights init_weights(const ModelConfig& config, const Rng& rng) {
  config.validate();
  const std::size_t d = config.d_model, hidden = config.ffn_hidden();
  const std::size_t n = config.parallelism;
  const double residual_std =
      kInitStd / std::sqrt(static_cast<double>(config.layers) * static_cast<double>(n));
  const auto normal = InitScheme::normal(kInitStd);

  ModelWeights w;
  w.config = config;
  w.embeddings = seeded_init({config.vocab, d}, normal, rng, "embeddings");
  w.positional = seeded_init({config.context, d}, normal, rng, "positional");
  w.layers.resize(config.layers);
  for (std::size_t i = 0; i < config.layers; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::string p = layer_prefix(i, k);
      LayerWeights lw = LayerWeights::zeros(d, hidden);
      lw.w_qkv = seeded_init({d, 3 * d}, normal, rng, p + "w_qkv");
      lw.w_o = seeded_init({d, d}, InitScheme::normal(residual_std), rng, p + "w_o");
      lw.w1 = seeded_init({d, hidden}, normal, rng, p + "w1");
      lw.w2 = seeded_init({hidden, d}, InitScheme::normal(residual_std), rng, p + "w2");
      w.layers[i].push_back(std::move(lw));
    }
  }
  if (config.arch == Arch::Kraken) {
    w.w_concat = Tensor({d * n, d});
    const double share = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < d; ++j) w.w_concat.at(k * d + j, j) = share;
    w.b_concat = Tensor({d});
  }
  w.final_ln = LayerNormParams::identity(d);
  return w;
}

namespace {

template <typename W, typename Fn>
void visit(W& w, Fn&& fn) {
  fn("embeddings", w.embeddings);
  fn("positional", w.positional);
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    for (std::size_t k = 0; k < w.layers[i].size(); ++k) {
      auto& lw = w.layers[i][k];
      const std::string p = layer_prefix(i, k);
      fn(p + "w_qkv", lw.w_qkv);
      fn(p + "b_qkv", lw.b_qkv);
      fn(p + "w_o", lw.w_o);
      fn(p + "b_o", lw.b_o);
      fn(p + "w1", lw.w1);
      fn(p + "b1", lw.b1);
      fn(p + "w2", lw.w2);
      fn(p + "b2", lw.b2);
      fn(p + "ln1.gain", lw.ln1.gain);
      fn(p + "ln1.bias", lw.ln1.bias);
      fn(p + "ln2.gain", lw.ln2.gain);
      fn(p + "ln2.bias", lw.ln2.bias);
    }
  }
  if (w.config.arch == Arch::Kraken) {
    fn("w_concat", w.w_concat);
    fn("b_concat", w.b_concat);
  }
  fn("final_ln.gain", w.final_ln.gain);
  fn("final_ln.bias", w.final_ln.bias);
}

}  // namespace

void for_each_parameter(ModelWeights& weights,
                        const std::function<void(const std::string&, Tensor&)>& fn) {
  visit(weights, fn);
}

void for_each_parameter(const ModelWeights& weights,
                        const std::function<void(const std::string&, const Tensor&)>& fn) {
  visit(weights, fn);
}

void check_shapes(const ModelWeights& w) {
  const auto& c = w.config;
  c.validate();
  const std::size_t d = c.d_model, hidden = c.ffn_hidden(), n = c.parallelism;
  auto expect = [](const Tensor& t, const Shape& shape, const std::string& name) {
    if (t.shape() != shape) {
      throw ConfigError("parameter " + name + " has shape " + to_string(t.shape()) +
                        ", expected " + to_string(shape));
    }
  };
  expect(w.embeddings, {c.vocab, d}, "embeddings");
  expect(w.positional, {c.context, d}, "positional");
  if (w.layers.size() != c.layers) throw ConfigError("layer count does not match config");
  for (std::size_t i = 0; i < c.layers; ++i) {
    if (w.layers[i].size() != n) throw ConfigError("sub-layer count does not match config");
    for (std::size_t k = 0; k < n; ++k) {
      const auto& lw = w.layers[i][k];
      const std::string p = layer_prefix(i, k);
      expect(lw.w_qkv, {d, 3 * d}, p + "w_qkv");
      expect(lw.b_qkv, {3 * d}, p + "b_qkv");
      expect(lw.w_o, {d, d}, p + "w_o");
      expect(lw.b_o, {d}, p + "b_o");
      expect(lw.w1, {d, hidden}, p + "w1");
      expect(lw.b1, {hidden}, p + "b1");
      expect(lw.w2, {hidden, d}, p + "w2");
      expect(lw.b2, {d}, p + "b2");
      for (const auto* ln : {&lw.ln1, &lw.ln2}) {
        expect(ln->gain, {d}, p + "ln.gain");
        expect(ln->bias, {d}, p + "ln.bias");
      }
    }
  }
  if (c.arch == Arch::Kraken) {
    expect(w.w_concat, {d * n, d}, "w_concat");
    expect(w.b_concat, {d}, "b_concat");
  }
  expect(w.final_ln.gain, {d}, "final_ln.gain");
  expect(w.final_ln.bias, {d}, "final_ln.bias");
}

}  // namespace kraken
