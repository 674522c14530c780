#include "kraken/parallel/kraken_distributed.hpp"

#include <optional>

#include "kraken/numerics/errors.hpp"

namespace kraken::parallel {
namespace {

// Everything one device owns: its tape, its weight column and its stream.
struct DeviceState {
  Tape tape{Tape::Mode::Inference};
  std::vector<LayerVars> layers;
  Var embeddings, positional, w_concat, b_concat;
  LayerNormVars final_ln;
  Var stream;
};

}  // namespace

Tensor run_kraken_distributed(std::span<const int> tokens, const ModelWeights& weights,
                              DeviceGroup& group, const DistributedOptions& options) {
  const auto& c = weights.config;
  if (c.arch != Arch::Kraken) throw ConfigError("run_kraken_distributed expects a Kraken model");
  c.validate_for_numerics();
  if (group.size() != c.parallelism) {
    throw ConfigError("model has parallelism " + std::to_string(c.parallelism) +
                      " but the device group has " + std::to_string(group.size()) + " devices");
  }
  check_tokens(c, tokens, 0);
  const std::size_t n = group.size();

  std::vector<std::size_t> ids(tokens.begin(), tokens.end());
  std::vector<std::size_t> positions(tokens.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;

  if (options.trace) options.trace->records.assign(c.layers, std::vector<SublayerRecord>(n));

  std::vector<DeviceState> devices(n);
  group.for_each_device([&](std::size_t k) {
    auto& dev = devices[k];
    Tape& t = dev.tape;
    dev.embeddings = t.parameter("embeddings", weights.embeddings);
    dev.positional = t.parameter("positional", weights.positional);
    for (std::size_t i = 0; i < c.layers; ++i)
      dev.layers.push_back(bind_layer(t, weights.layers[i][k], layer_prefix(i, k)));
    dev.w_concat = t.parameter("w_concat", weights.w_concat);
    dev.b_concat = t.parameter("b_concat", weights.b_concat);
    dev.final_ln = {t.parameter("final_ln.gain", weights.final_ln.gain),
                    t.parameter("final_ln.bias", weights.final_ln.bias)};
    dev.stream = t.add(t.gather_rows(dev.embeddings, ids), t.gather_rows(dev.positional, positions));
  });

  std::optional<std::vector<Tensor>> reduced;
  std::vector<Tensor> outputs(n);
  for (std::size_t i = 0; i < c.layers; ++i) {
    group.for_each_device([&](std::size_t k) {
      auto& dev = devices[k];
      Tape& t = dev.tape;
      const Var y = reduced ? t.constant((*reduced)[k]) : dev.stream;
      SublayerRecord* rec = options.trace ? &options.trace->records[i][k] : nullptr;
      Var out = kraken_sublayer_forward(t, dev.stream, y, dev.layers[i], c.heads, nullptr, rec);
      if (options.override_output) {
        Tensor value = t.value(out);
        options.override_output(i, k, value);
        out = t.constant(std::move(value));
      }
      dev.stream = out;
      outputs[k] = t.value(out);
    });
    if (i + 1 < c.layers) reduced = group.all_reduce(outputs, i);
  }

  const auto gathered = group.all_gather(outputs, c.layers - 1);
  std::vector<Tensor> logits(n);
  group.for_each_device([&](std::size_t k) {
    auto& dev = devices[k];
    Tape& t = dev.tape;
    const Var all = n == 1 ? dev.stream : t.constant(gathered[k]);
    Var h = t.add_bias(t.matmul(all, dev.w_concat), dev.b_concat);
    Var normed = t.layer_norm(h, dev.final_ln.gain, dev.final_ln.bias);
    logits[k] = t.value(t.matmul_bt(normed, dev.embeddings));
  });
  if (options.replica_logits) *options.replica_logits = logits;
  return logits.front();
}

}  // namespace kraken::parallel
