#include "kraken/app/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "kraken/inference/generation.hpp"
#include "kraken/io/checkpoint.hpp"
#include "kraken/model/forward.hpp"
#include "kraken/numerics/errors.hpp"
#include "kraken/numerics/ops.hpp"
#include "kraken/parallel/kraken_distributed.hpp"
#include "kraken/parallel/megatron.hpp"

namespace kraken::app {
namespace {

double max_abs(const Tensor& t) {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Tensor random_tensor(const Shape& shape, double scale, std::mt19937_64& gen) {
  std::normal_distribution<double> dist(0.0, scale);
  Tensor t(shape);
  for (double& v : t.data()) v = dist(gen);
  return t;
}

std::vector<std::pair<std::string, Tensor*>> sublayer_params(LayerWeights& w) {
  return {{"w_qkv", &w.w_qkv}, {"b_qkv", &w.b_qkv}, {"w_o", &w.w_o},
          {"b_o", &w.b_o},     {"w1", &w.w1},       {"b1", &w.b1},
          {"w2", &w.w2},       {"b2", &w.b2},       {"ln1.gain", &w.ln1.gain},
          {"ln1.bias", &w.ln1.bias}, {"ln2.gain", &w.ln2.gain}, {"ln2.bias", &w.ln2.bias}};
}

double weighted_sum(const Tensor& out, const Tensor& r) {
  double s = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) s += out[k] * r[k];
  return s;
}

std::string format(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string VerifyReport::to_text() const {
  std::ostringstream out;
  for (const auto& c : checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << " measured=" << format(c.measured)
        << " tolerance=" << format(c.tolerance);
    if (!c.detail.empty()) out << " " << c.detail;
    out << '\n';
  }
  return out.str();
}

std::vector<int> random_tokens(std::size_t count, std::size_t vocab, std::uint64_t seed) {
  auto gen = Rng(seed).stream("tokens");
  std::uniform_int_distribution<int> pick(0, static_cast<int>(vocab) - 1);
  std::vector<int> tokens(count);
  for (auto& t : tokens) t = pick(gen);
  return tokens;
}

parallel::EquivalenceReport megatron_equivalence(const ModelWeights& weights, std::size_t n,
                                                 std::span<const int> tokens) {
  const auto sharded = parallel::shard_standard(weights, n);
  parallel::DeviceGroup group(n);
  return parallel::equivalence_report(parallel::run_sharded_standard(tokens, sharded, group),
                                      model_forward(weights, tokens));
}

IndependenceResult sublayer_independence(const ModelWeights& weights, std::span<const int> tokens) {
  const auto& c = weights.config;
  IndependenceResult result;
  result.own_device_min_delta = std::numeric_limits<double>::infinity();
  ActivationTrace base;
  {
    parallel::DeviceGroup group(c.parallelism);
    parallel::DistributedOptions options;
    options.trace = &base;
    parallel::run_kraken_distributed(tokens, weights, group, options);
  }
  for (std::size_t i = 0; i + 1 < c.layers; ++i) {
    for (std::size_t j = 0; j < c.parallelism; ++j) {
      ActivationTrace perturbed;
      parallel::DeviceGroup group(c.parallelism);
      parallel::DistributedOptions options;
      options.trace = &perturbed;
      options.override_output = [&](std::size_t layer, std::size_t device, Tensor& out) {
        if (layer != i || device != j) return;
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += 0.5 + 0.01 * static_cast<double>(k % 7);
      };
      parallel::run_kraken_distributed(tokens, weights, group, options);
      for (std::size_t k = 0; k < c.parallelism; ++k) {
        const double delta =
            max_abs_diff(perturbed.records[i + 1][k].attention, base.records[i + 1][k].attention);
        if (k == j) {
          result.own_device_min_delta = std::min(result.own_device_min_delta, delta);
        } else {
          result.cross_device_max_delta = std::max(result.cross_device_max_delta, delta);
          ++result.combinations;
        }
      }
    }
  }
  if (!std::isfinite(result.own_device_min_delta)) result.own_device_min_delta = 0.0;
  return result;
}

std::vector<GradientCheck> gradient_check_sublayer(const ModelConfig& config, std::uint64_t seed,
                                                   std::size_t seq_len, double h) {
  config.validate_for_numerics();
  const std::size_t d = config.d_model;
  auto gen = Rng(seed).stream("gradcheck");
  LayerWeights w = LayerWeights::zeros(d, config.ffn_hidden());
  for (auto& [name, t] : sublayer_params(w)) {
    *t = random_tensor(t->shape(), 0.3, gen);
    if (name.ends_with("gain"))
      for (double& v : t->data()) v += 1.0;
  }
  const Tensor x = random_tensor({seq_len, d}, 1.0, gen);
  const Tensor y = random_tensor({seq_len, d}, 1.0, gen);
  const Tensor r = random_tensor({seq_len, d}, 1.0, gen);

  Tape tape;
  const LayerVars vars = bind_layer(tape, w, "");
  const Var out = kraken_sublayer_forward(tape, tape.constant(x), tape.constant(y), vars, config.heads);
  const Var loss = tape.sum(tape.mul(out, tape.constant(r)));
  const GradientMap grads = tape.backward(loss, Tensor(tape.value(loss).shape(), 1.0));

  auto eval = [&]() { return weighted_sum(kraken_sublayer_forward(x, y, w, config.heads), r); };
  std::vector<GradientCheck> checks;
  for (auto& [name, t] : sublayer_params(w)) {
    const Tensor& analytic = grads.at(name);
    std::vector<double> numeric(t->size());
    for (std::size_t k = 0; k < t->size(); ++k) {
      const double saved = (*t)[k];
      (*t)[k] = saved + h;
      const double plus = eval();
      (*t)[k] = saved - h;
      const double minus = eval();
      (*t)[k] = saved;
      numeric[k] = (plus - minus) / (2.0 * h);
    }
    std::vector<double> diff(numeric.size());
    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = analytic[k] - numeric[k];
    const double scale = std::max(norm(analytic.data()), norm(numeric));
    checks.push_back({name, scale > 0.0 ? norm(diff) / scale : 0.0});
  }
  return checks;
}

double prefix_consistency_error(const ModelWeights& weights, std::span<const int> tokens) {
  if (tokens.size() < 2) throw DimensionError("prefix consistency needs at least two tokens");
  const Tensor full = model_forward(weights, tokens);
  double worst = 0.0;
  for (std::size_t split = 1; split < tokens.size(); ++split) {
    auto state = inference::prefill(weights, tokens.first(split));
    Tensor logits = state.logits_last;
    for (std::size_t t = split; t < tokens.size(); ++t) {
      logits = inference::decode_step(weights, state.cache, tokens[t]);
      const auto ref_row = full.row(t);
      const Tensor ref({ref_row.size()}, std::vector<double>(ref_row.begin(), ref_row.end()));
      const double scale = max_abs(ref);
      worst = std::max(worst, max_abs_diff(logits, ref) / (scale > 0.0 ? scale : 1.0));
    }
  }
  return worst;
}

VerifyReport run_verify(const ModelConfig& config, std::uint64_t seed,
                        const ModelWeights* kraken_weights) {
  config.validate_for_numerics();
  VerifyReport report;
  auto add = [&](std::string name, bool passed, double measured, double tol, std::string detail = "") {
    report.checks.push_back({std::move(name), passed, measured, tol, std::move(detail)});
  };
  const Rng rng(seed);
  const std::size_t seq = std::min<std::size_t>(config.context, 16);
  const auto tokens = random_tokens(seq, config.vocab, seed);

  for (Arch arch : {Arch::Standard, Arch::ParallelBlock}) {
    ModelConfig sc = config;
    sc.arch = arch;
    sc.parallelism = 1;
    const ModelWeights sw = init_weights(sc, rng);
    for (std::size_t n : {1, 2, 4}) {
      if (sc.heads % n != 0) continue;
      const auto rep = megatron_equivalence(sw, n, tokens);
      const std::string name = "megatron_" + std::string(kraken::to_string(arch)) + "_n" + std::to_string(n);
      add(name, rep.max_rel <= 1e-10 && rep.argmax_row_agreement == 1.0, rep.max_rel, 1e-10,
          "argmax_agreement=" + format(rep.argmax_row_agreement));
      parallel::DeviceGroup group(n);
      parallel::run_sharded_standard(tokens, parallel::shard_standard(sw, n), group);
      const std::size_t expected = arch == Arch::Standard ? 2 * sc.layers : sc.layers;
      const std::size_t got = group.count(parallel::CollectiveKind::AllReduce);
      add(name + "_census", got == expected && group.log().size() == expected,
          static_cast<double>(got), static_cast<double>(expected));
    }
  }

  ModelConfig kc = config;
  kc.arch = Arch::Kraken;
  const ModelWeights fresh = kraken_weights ? ModelWeights{} : init_weights(kc, rng);
  const ModelWeights& kw = kraken_weights ? *kraken_weights : fresh;
  const auto& c = kw.config;
  const auto ktokens = random_tokens(std::min<std::size_t>(c.context, 16), c.vocab, seed);

  {
    parallel::DeviceGroup group(c.parallelism);
    const Tensor dist = parallel::run_kraken_distributed(ktokens, kw, group);
    const double delta = max_abs_diff(dist, model_forward(kw, ktokens));
    add("kraken_distributed_matches_forward", delta == 0.0, delta, 0.0);
    const std::size_t ar = group.count(parallel::CollectiveKind::AllReduce);
    const std::size_t ag = group.count(parallel::CollectiveKind::AllGather);
    add("kraken_census", ar == c.layers - 1 && ag == 1, static_cast<double>(ar + ag),
        static_cast<double>(c.layers), "allreduce=" + std::to_string(ar) + " allgather=" + std::to_string(ag));
  }
  {
    const auto ind = sublayer_independence(kw, ktokens);
    add("sublayer_independence", ind.cross_device_max_delta == 0.0 && ind.own_device_min_delta > 0.0,
        ind.cross_device_max_delta, 0.0,
        "pairs=" + std::to_string(ind.combinations) + " own_min_delta=" + format(ind.own_device_min_delta));
  }
  {
    const std::size_t len = std::min<std::size_t>(c.context, 64);
    const auto seq_tokens = random_tokens(len, c.vocab, seed + 1);
    const double err = prefix_consistency_error(kw, seq_tokens);
    add("prefix_consistency", err <= 1e-10, err, 1e-10, "tokens=" + std::to_string(len));
  }
  {
    const auto grads = gradient_check_sublayer(c, seed, std::min<std::size_t>(c.context, 6));
    double worst = 0.0;
    std::string worst_name;
    for (const auto& g : grads)
      if (g.rel_error >= worst) {
        worst = g.rel_error;
        worst_name = g.parameter;
      }
    add("gradient_check", worst <= 1e-5, worst, 1e-5, "worst=" + worst_name);
  }
  {
    const ModelWeights back = io::decode_checkpoint(io::encode_checkpoint(kw));
    bool same = back.config == kw.config;
    std::vector<const Tensor*> a, b;
    for_each_parameter(kw, [&](const std::string&, const Tensor& t) { a.push_back(&t); });
    for_each_parameter(back, [&](const std::string&, const Tensor& t) { b.push_back(&t); });
    same = same && a.size() == b.size();
    for (std::size_t k = 0; same && k < a.size(); ++k) same = bit_equal(*a[k], *b[k]);
    add("checkpoint_roundtrip", same, same ? 0.0 : 1.0, 0.0);
  }
  return report;
}

}  // namespace kraken::app
