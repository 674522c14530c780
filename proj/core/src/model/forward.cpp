#include "kraken/model/forward.hpp"

#include <optional>
#include <vector>

#include "kraken/numerics/errors.hpp"

namespace kraken {

ModelVars bind_model(Tape& tape, const ModelWeights& w) {
  ModelVars v;
  v.embeddings = tape.parameter("embeddings", w.embeddings);
  v.positional = tape.parameter("positional", w.positional);
  v.layers.resize(w.layers.size());
  for (std::size_t i = 0; i < w.layers.size(); ++i)
    for (std::size_t k = 0; k < w.layers[i].size(); ++k)
      v.layers[i].push_back(bind_layer(tape, w.layers[i][k], layer_prefix(i, k)));
  if (w.config.arch == Arch::Kraken) {
    v.w_concat = tape.parameter("w_concat", w.w_concat);
    v.b_concat = tape.parameter("b_concat", w.b_concat);
  }
  v.final_ln = {tape.parameter("final_ln.gain", w.final_ln.gain),
                tape.parameter("final_ln.bias", w.final_ln.bias)};
  return v;
}

void check_tokens(const ModelConfig& config, std::span<const int> tokens, std::size_t offset) {
  if (tokens.empty()) throw DimensionError("empty token sequence");
  for (int t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= config.vocab) {
      throw DimensionError("token id " + std::to_string(t) + " outside vocabulary of " +
                           std::to_string(config.vocab));
    }
  }
  if (offset + tokens.size() > config.context) {
    throw CapacityError("sequence of " + std::to_string(offset + tokens.size()) +
                        " positions exceeds context " + std::to_string(config.context));
  }
}

namespace {

AttentionCache* cache_entry(const ForwardOptions& o, std::size_t layer, std::size_t device) {
  return o.cache == nullptr ? nullptr : &o.cache->entries.at(layer).at(device);
}

Var maybe_override(Tape& tape, Var out, const ForwardOptions& o, std::size_t layer,
                   std::size_t device) {
  if (!o.override_output) return out;
  Tensor value = tape.value(out);
  o.override_output(layer, device, value);
  return tape.constant(std::move(value));
}

}  // namespace

Var forward_logits(Tape& tape, const ModelVars& vars, const ModelConfig& config,
                   std::span<const int> tokens, const ForwardOptions& options) {
  config.validate_for_numerics();
  const std::size_t offset = options.cache ? options.cache->cur_len() : 0;
  check_tokens(config, tokens, offset);
  const std::size_t len = tokens.size();
  const std::size_t n = config.parallelism;

  std::vector<std::size_t> ids(tokens.begin(), tokens.end());
  std::vector<std::size_t> positions(len);
  for (std::size_t i = 0; i < len; ++i) positions[i] = offset + i;
  Var h = tape.add(tape.gather_rows(vars.embeddings, ids),
                   tape.gather_rows(vars.positional, positions));

  if (options.trace) options.trace->records.assign(config.layers, std::vector<SublayerRecord>(n));

  if (config.arch == Arch::Kraken) {
    std::vector<Var> streams(n, h);
    for (std::size_t i = 0; i < config.layers; ++i) {
      // The first layer has no preceding AllReduce: y is the sub-layer input itself.
      std::optional<Var> reduced;
      if (i > 0) reduced = tape.add_n(streams);
      std::vector<Var> outs(n);
      for (std::size_t k = 0; k < n; ++k) {
        SublayerRecord* rec = options.trace ? &options.trace->records[i][k] : nullptr;
        outs[k] = kraken_sublayer_forward(tape, streams[k], reduced.value_or(streams[k]),
                                          vars.layers[i][k], config.heads,
                                          cache_entry(options, i, k), rec);
        outs[k] = maybe_override(tape, outs[k], options, i, k);
      }
      streams = std::move(outs);
    }
    Var gathered = n == 1 ? streams.front() : tape.concat_cols(streams);
    h = tape.add_bias(tape.matmul(gathered, vars.w_concat), vars.b_concat);
  } else {
    for (std::size_t i = 0; i < config.layers; ++i) {
      const Var in = h;
      h = config.arch == Arch::Standard
              ? standard_layer_forward(tape, h, vars.layers[i][0], config.heads,
                                       cache_entry(options, i, 0))
              : parallel_block_forward(tape, h, vars.layers[i][0], config.heads,
                                       cache_entry(options, i, 0));
      if (options.trace) {
        auto& rec = options.trace->records[i][0];
        rec.input = tape.value(in);
        rec.reduced = tape.value(in);
        rec.output = tape.value(h);
      }
      h = maybe_override(tape, h, options, i, 0);
    }
  }

  Var normed = apply_layer_norm(tape, h, vars.final_ln);
  return tape.matmul_bt(normed, vars.embeddings);
}

Tensor model_forward(const ModelWeights& weights, std::span<const int> tokens,
                     const ForwardOptions& options) {
  Tape tape(Tape::Mode::Inference);
  const ModelVars vars = bind_model(tape, weights);
  return tape.value(forward_logits(tape, vars, weights.config, tokens, options));
}

KVCache make_kv_cache(const ModelConfig& config) {
  config.validate_for_numerics();
  return KVCache::create(config.layers, config.parallelism, config.d_model, config.context);
}

}  // namespace kraken
