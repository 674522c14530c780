// Randomised invariants. Each case derives its engine from a printed seed.
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "kraken/inference/generation.hpp"
#include "kraken/inference/memory.hpp"
#include "kraken/io/checkpoint.hpp"
#include "kraken/io/run_config.hpp"
#include "kraken/model/forward.hpp"
#include "kraken/numerics/ops.hpp"
#include "kraken/parallel/device_group.hpp"
#include "kraken/parallel/equivalence.hpp"
#include "kraken/parallel/kraken_distributed.hpp"
#include "kraken/parallel/megatron.hpp"
#include "kraken/perfsim/comparison.hpp"
#include "kraken/perfsim/schedule.hpp"
#include "kraken/perfsim/simulator.hpp"
#include "test_support.hpp"

namespace kraken {
namespace {

using testing::pick;
using testing::random_config;
using testing::random_tensor;
using testing::random_tokens;

constexpr int kCases = 25;
constexpr std::array kArchs{Arch::Standard, Arch::ParallelBlock, Arch::Kraken};

Shape random_shape(std::mt19937_64& gen, std::size_t max_rows = 6, std::size_t max_cols = 6) {
  return {pick(gen, 1, max_rows), pick(gen, 1, max_cols)};
}

double uniform(std::mt19937_64& gen, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(gen);
}

double log_uniform(std::mt19937_64& gen, double lo, double hi) {
  return std::exp(uniform(gen, std::log(lo), std::log(hi)));
}

ModelWeights noisy_weights(const ModelConfig& c, std::mt19937_64& gen) {
  ModelWeights w = init_weights(c, Rng(gen()));
  for_each_parameter(w, [&](const std::string&, Tensor& t) {
    const Tensor noise = random_tensor(t.shape(), gen, 0.05);
    for (std::size_t k = 0; k < t.size(); ++k) t[k] += noise[k];
  });
  return w;
}

// numerics

TEST(Numerics, SoftmaxRowsSumToOne) {
  for (int s = 0; s < kCases; ++s) {
    std::mt19937_64 gen(s);
    const Tensor x = random_tensor(random_shape(gen, 8, 12), gen, log_uniform(gen, 1e-3, 300.0));
    const Tensor p = ops::softmax_rows(x);
    for (std::size_t i = 0; i < p.rows(); ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < p.cols(); ++j) total += p.at(i, j);
      EXPECT_NEAR(total, 1.0, 1e-12) << "seed " << s;
    }
  }
}

TEST(Numerics, GeluOddPartIsIdentity) {
  for (int s = 0; s < kCases; ++s) {
    std::mt19937_64 gen(s);
    const double scale = log_uniform(gen, 1e-3, 50.0);
    for (int k = 0; k < 40; ++k) {
      const double x = uniform(gen, -scale, scale);
      EXPECT_NEAR(ops::gelu(x) - ops::gelu(-x), x, 1e-12) << "seed " << s << " x " << x;
    }
  }
}

TEST(Numerics, IdentityMatmulIsExact) {
  for (int s = 0; s < kCases; ++s) {
    std::mt19937_64 gen(s);
    const std::size_t m = pick(gen, 1, 7), k = pick(gen, 1, 7), n = pick(gen, 1, 7);
    const Tensor a = random_tensor({m, k}, gen), b = random_tensor({k, n}, gen);
    EXPECT_TRUE(bit_equal(ops::matmul(ops::matmul(a, Tensor::identity(k)), b), ops::matmul(a, b)));
  }
}

TEST(Numerics, OpsAreDeterministic) {
  for (int s = 0; s < kCases; ++s) {
    std::mt19937_64 gen(s);
    const Shape shape = random_shape(gen);
    const Tensor x = random_tensor(shape, gen), g = random_tensor({shape[1]}, gen);
    const Tensor b = random_tensor({shape[1]}, gen);
    auto run = [&] { return ops::gelu(ops::softmax_rows(ops::matmul_bt(x, x))); };
    EXPECT_TRUE(bit_equal(run(), run()));
    EXPECT_TRUE(bit_equal(ops::layer_norm(x, g, b), ops::layer_norm(x, g, b)));
  }
}

TEST(Numerics, ComposedGradientsMatchFiniteDifferences) {
  for (int s = 0; s < 10; ++s) {
    std::mt19937_64 gen(s);
    const std::size_t l = pick(gen, 1, 4), d = pick(gen, 3, 6), f = pick(gen, 1, 5);
    std::vector<Tensor> in{random_tensor({l, d}, gen), random_tensor({d}, gen, 0.3),
                           random_tensor({d}, gen, 0.3), random_tensor({d, f}, gen),
                           random_tensor({f}, gen, 0.5)};
    for (double& v : in[1].data()) v += 1.0;
    const Tensor r = random_tensor({l, f}, gen);
    const Tensor mix = random_tensor({l, f}, gen);
    auto build = [&](Tape& t, const std::vector<Tensor>& vals) {
      std::vector<Var> v;
      for (std::size_t k = 0; k < vals.size(); ++k) v.push_back(t.parameter("p" + std::to_string(k), vals[k]));
      Var h = t.layer_norm(v[0], v[1], v[2]);
      h = t.gelu(t.add_bias(t.matmul(h, v[3]), v[4]));
      h = t.causal_softmax_rows(t.scale(t.matmul_bt(h, h), 1.0 / static_cast<double>(f)), 0);
      const Var proj = t.matmul(h, t.constant(mix));
      return t.sum(t.mul(proj, t.constant(r)));
    };
    Tape tape;
    const GradientMap grads = tape.backward(build(tape, in), Tensor({1, 1}, 1.0));
    const double h = 1e-5;
    for (std::size_t k = 0; k < in.size(); ++k) {
      std::vector<double> fd(in[k].size());
      for (std::size_t e = 0; e < fd.size(); ++e) {
        const double saved = in[k][e];
        auto at = [&](double v) {
          in[k][e] = v;
          Tape t(Tape::Mode::Inference);
          const double out = t.value(build(t, in))[0];
          in[k][e] = saved;
          return out;
        };
        fd[e] = (at(saved + h) - at(saved - h)) / (2 * h);
      }
      EXPECT_LE(testing::rel_norm_error(grads.at("p" + std::to_string(k)).data(), fd), 1e-5)
          << "seed " << s << " input " << k << " l=" << l << " d=" << d << " f=" << f;
    }
  }
}

// model

TEST(Model, ForwardIsCausal) {
  for (int s = 0; s < kCases; ++s) {
    std::mt19937_64 gen(s);
    const ModelConfig c = random_config(gen, kArchs[s % 3], 3);
    const ModelWeights w = noisy_weights(c, gen);
    std::vector<int> tokens = random_tokens(gen, pick(gen, 2, c.context), c.vocab);
    const Tensor base = model_forward(w, tokens);
    const std::size_t t = pick(gen, 0, tokens.size() - 2);
    for (std::size_t j = t + 1; j < tokens.size(); ++j) tokens[j] = static_cast<int>(pick(gen, 0, c.vocab - 1));
    const Tensor changed = model_forward(w, tokens);
    EXPECT_TRUE(bit_equal(ops::slice_rows(base, 0, t + 1), ops::slice_rows(changed, 0, t + 1)))
        << "seed " << s << " " << describe(c);
  }
}

TEST(Model, SublayerIndependenceUnderArbitraryPerturbation) {
  for (int s = 0; s < kCases; ++s) {
    std::mt19937_64 gen(s);
    ModelConfig c = random_config(gen, Arch::Kraken, 4);
    c.layers = std::max<std::size_t>(c.layers, 2);
    c.parallelism = pick(gen, 2, 4);
    const ModelWeights w = noisy_weights(c, gen);
    const auto tokens = random_tokens(gen, pick(gen, 1, 8), c.vocab);
    const std::size_t layer = pick(gen, 0, c.layers - 2), dev = pick(gen, 0, c.parallelism - 1);
    const Tensor junk = random_tensor({tokens.size(), c.d_model}, gen, 10.0);

    ActivationTrace base, hit;
    ForwardOptions plain;
    plain.trace = &base;
    model_forward(w, tokens, plain);
    ForwardOptions perturbed;
    perturbed.trace = &hit;
    perturbed.override_output = [&](std::size_t i, std::size_t k, Tensor& out) {
      if (i == layer && k == dev) out = junk;
    };
    model_forward(w, tokens, perturbed);
    for (std::size_t k = 0; k < c.parallelism; ++k) {
      const auto& a = base.records[layer + 1][k];
      const auto& b = hit.records[layer + 1][k];
      if (k != dev) EXPECT_TRUE(bit_equal(a.attention, b.attention)) << "seed " << s;
      EXPECT_FALSE(bit_equal(a.reduced, b.reduced)) << "seed " << s;
    }
  }
}

TEST(Model, DerivedDimensionReproducesTarget) {
  for (int s = 0; s < 200; ++s) {
    std::mt19937_64 gen(s);
    const std::size_t n = pick(gen, 1, 8), layers = pick(gen, 1, 96), vocab = pick(gen, 1000, 60000);
    const double target = log_uniform(gen, 1e6, 2e11);
    const double d = derive_kraken_dim(target, n, layers, vocab);
    ModelConfig c;
    c.arch = Arch::Kraken;
    c.parallelism = n;
    c.layers = layers;
    c.vocab = vocab;
    c.d_model = static_cast<std::size_t>(std::llround(d));
    if (c.d_model == 0) continue;
    const double p = static_cast<double>(count_params(c));
    const double bound = static_cast<double>(vocab) / target +
                         16.0 * layers * n * static_cast<double>(c.d_model) / target;
    EXPECT_LT(std::abs(p - target) / target, bound) << "seed " << s;
    const double exact_count = 8.0 * layers * n * d * d + vocab * d;
    EXPECT_NEAR(exact_count / target, 1.0, 1e-9) << "seed " << s;
  }
}

TEST(Model, UnembeddingIsTiedToEmbeddings) {
  for (int s = 0; s < 10; ++s) {
    std::mt19937_64 gen(s);
    ModelConfig c = random_config(gen, kArchs[s % 3], 2);
    c.vocab = 4 * c.d_model + pick(gen, 1, 9);
    const ModelWeights w = noisy_weights(c, gen);
    std::set<std::string> names;
    std::size_t vocab_sized = 0;
    for_each_parameter(w, [&](const std::string& name, const Tensor& t) {
      names.insert(name);
      vocab_sized += t.size() == c.vocab * c.d_model ? 1 : 0;
    });
    EXPECT_EQ(vocab_sized, 1u);
    EXPECT_EQ(names.count("embeddings"), 1u);
    // A token never fed as input still receives gradient through the output projection.
    const auto tokens = std::vector<int>{0};
    Tape tape;
    const ModelVars vars = bind_model(tape, w);
    const Var logits = forward_logits(tape, vars, c, tokens);
    const std::vector<int> target{static_cast<int>(c.vocab - 1)};
    const GradientMap g = tape.backward(tape.cross_entropy(logits, target), Tensor({1, 1}, 1.0));
    double row = 0.0;
    for (std::size_t j = 0; j < c.d_model; ++j) row += std::abs(g.at("embeddings").at(c.vocab - 1, j));
    EXPECT_GT(row, 0.0) << "seed " << s;
  }
}

// parallel

TEST(Parallel, MegatronEquivalence) {
  for (int s = 0; s < kCases; ++s) {
    std::mt19937_64 gen(s);
    const ModelConfig c = random_config(gen, s % 2 ? Arch::Standard : Arch::ParallelBlock, 4);
    std::vector<std::size_t> ns;
    for (std::size_t n : {1, 2, 4})
      if (c.heads % n == 0) ns.push_back(n);
    const std::size_t n = ns[pick(gen, 0, ns.size() - 1)];
    const ModelWeights w = noisy_weights(c, gen);
    const auto tokens = random_tokens(gen, pick(gen, 1, c.context), c.vocab);
    parallel::DeviceGroup group(n);
    const Tensor sharded = parallel::run_sharded_standard(tokens, parallel::shard_standard(w, n), group);
    const auto r = parallel::equivalence_report(sharded, model_forward(w, tokens));
    EXPECT_LE(r.max_rel, 1e-10) << "seed " << s;
    EXPECT_EQ(r.argmax_row_agreement, 1.0) << "seed " << s;
    const std::size_t per_layer = c.arch == Arch::Standard ? 2 : 1;
    EXPECT_EQ(group.count(parallel::CollectiveKind::AllReduce), per_layer * c.layers);
  }
}

TEST(Parallel, KrakenDistributionIsTransparent) {
  for (int s = 0; s < kCases; ++s) {
    std::mt19937_64 gen(s);
    const ModelConfig c = random_config(gen, Arch::Kraken, 4);
    const ModelWeights w = noisy_weights(c, gen);
    const auto tokens = random_tokens(gen, pick(gen, 1, c.context), c.vocab);
    parallel::DeviceGroup group(c.parallelism, s % 2 == 1);
    EXPECT_TRUE(bit_equal(parallel::run_kraken_distributed(tokens, w, group), model_forward(w, tokens)))
        << "seed " << s;
    EXPECT_EQ(group.count(parallel::CollectiveKind::AllReduce), c.layers - 1);
    EXPECT_EQ(group.count(parallel::CollectiveKind::AllGather), 1u);
  }
}

TEST(Parallel, DistributedPerturbationStaysLocal) {
  for (int s = 0; s < 10; ++s) {
    std::mt19937_64 gen(s);
    ModelConfig c = random_config(gen, Arch::Kraken, 4);
    c.layers = std::max<std::size_t>(c.layers, 2);
    c.parallelism = pick(gen, 2, 4);
    const ModelWeights w = noisy_weights(c, gen);
    const auto tokens = random_tokens(gen, pick(gen, 1, 6), c.vocab);
    const std::size_t layer = pick(gen, 0, c.layers - 2), dev = pick(gen, 0, c.parallelism - 1);
    ActivationTrace base, hit;
    parallel::DeviceGroup g1(c.parallelism), g2(c.parallelism);
    parallel::DistributedOptions o1, o2;
    o1.trace = &base;
    o2.trace = &hit;
    o2.override_output = [&](std::size_t i, std::size_t k, Tensor& out) {
      if (i == layer && k == dev)
        for (double& v : out.data()) v = -v;
    };
    parallel::run_kraken_distributed(tokens, w, g1, o1);
    parallel::run_kraken_distributed(tokens, w, g2, o2);
    for (std::size_t k = 0; k < c.parallelism; ++k)
      if (k != dev)
        EXPECT_TRUE(bit_equal(base.records[layer + 1][k].attention, hit.records[layer + 1][k].attention))
            << "seed " << s;
    EXPECT_EQ(g1.log(), g2.log());
  }
}

// inference

TEST(Inference, AnySplitMatchesRecompute) {
  for (int s = 0; s < kCases; ++s) {
    std::mt19937_64 gen(s);
    const ModelConfig c = random_config(gen, kArchs[s % 3], 3);
    const ModelWeights w = noisy_weights(c, gen);
    const auto tokens = random_tokens(gen, pick(gen, 2, c.context), c.vocab);
    const std::size_t split = pick(gen, 1, tokens.size() - 1);
    auto r = inference::prefill(w, std::span<const int>(tokens).first(split));
    Tensor logits = r.logits_last;
    for (std::size_t t = split; t < tokens.size(); ++t) {
      const std::size_t before = r.cache.cur_len();
      const Tensor old_keys = r.cache.entries[0][0].keys;
      logits = inference::decode_step(w, r.cache, tokens[t]);
      EXPECT_EQ(r.cache.cur_len(), before + 1);
      EXPECT_TRUE(bit_equal(ops::slice_rows(r.cache.entries[0][0].keys, 0, before), old_keys));
    }
    const Tensor full = model_forward(w, tokens);
    const Tensor row = ops::slice_rows(full, full.rows() - 1, 1);
    const Tensor last({c.vocab}, std::vector<double>(row.data().begin(), row.data().end()));
    double scale = 0.0;
    for (double v : last.data()) scale = std::max(scale, std::abs(v));
    EXPECT_LE(max_abs_diff(logits, last), 1e-10 * scale) << "seed " << s;
  }
}

TEST(Inference, KvBytesIsLinearAndMqaDividesByHeads) {
  for (int s = 0; s < 200; ++s) {
    std::mt19937_64 gen(s);
    ModelConfig c;
    c.arch = s % 2 ? Arch::Kraken : Arch::Standard;
    c.heads = pick(gen, 1, 64);
    c.d_model = c.heads * pick(gen, 1, 256);
    c.parallelism = c.arch == Arch::Kraken ? pick(gen, 1, 8) : 1;
    c.context = 8192;
    const std::uint64_t b = pick(gen, 1, 64), l = pick(gen, 0, 4096), dt = pick(gen, 1, 4);
    using inference::AttentionVariant;
    using inference::kv_bytes;
    const auto base = kv_bytes(c, AttentionVariant::mha(), b, l, dt);
    EXPECT_EQ(kv_bytes(c, AttentionVariant::mha(), 3 * b, l, dt), 3 * base);
    EXPECT_EQ(kv_bytes(c, AttentionVariant::mha(), b, l / 2, dt) * 2 + (l % 2) * kv_bytes(c, AttentionVariant::mha(), b, 1, dt), base);
    EXPECT_EQ(kv_bytes(c, AttentionVariant::mha(), b, l, 2 * dt), 2 * base);
    EXPECT_EQ(kv_bytes(c, AttentionVariant::mqa(), b, l, dt) * c.heads, base);
    if (c.arch == Arch::Kraken) {
      ModelConfig single = c;
      single.parallelism = 1;
      EXPECT_EQ(kv_bytes(single, AttentionVariant::mha(), b, l, dt) * c.parallelism, base);
    }
  }
}

// perfsim

ModelConfig random_engine(std::mt19937_64& gen, Arch arch, std::size_t n) {
  ModelConfig c;
  c.arch = arch;
  c.layers = pick(gen, 1, 12);
  c.heads = n * pick(gen, 1, 8);
  c.d_model = c.heads * 8 * pick(gen, 1, 16);
  c.parallelism = arch == Arch::Kraken ? n : 1;
  c.vocab = pick(gen, 1000, 60000);
  c.context = 4096;
  return c;
}

perfsim::Topology random_topology(std::mt19937_64& gen, std::size_t n) {
  return {n, log_uniform(gen, 1e9, 1e13), log_uniform(gen, 1e-7, 1e-3)};
}

perfsim::DeviceSpec random_device(std::mt19937_64& gen) {
  return {log_uniform(gen, 1e13, 1e15), log_uniform(gen, 1e11, 3e12), uniform(gen, 0.2, 1.0)};
}

TEST(Perfsim, OverlapNeverHurts) {
  for (int s = 0; s < 60; ++s) {
    std::mt19937_64 gen(s);
    const std::size_t n = pick(gen, 1, 8);
    ModelConfig c = random_engine(gen, Arch::Kraken, n);
    c.layers = std::max<std::size_t>(c.layers, 2);
    const perfsim::Topology topo = random_topology(gen, n);
    const perfsim::DeviceSpec dev = random_device(gen);
    const std::size_t ctx = pick(gen, 1, 4096);
    perfsim::ScheduleOptions on, off;
    off.overlap = false;
    const double t_on = perfsim::simulate(perfsim::build_schedule(c, topo, ctx, on), topo, dev).ttft;
    const double t_off = perfsim::simulate(perfsim::build_schedule(c, topo, ctx, off), topo, dev).ttft;
    if (n == 1) EXPECT_EQ(t_on, t_off) << "seed " << s;
    else EXPECT_LT(t_on, t_off) << "seed " << s;
  }
}

TEST(Perfsim, SchedulesAreValidAndCensusMatchesParallel) {
  for (int s = 0; s < 45; ++s) {
    std::mt19937_64 gen(s);
    const std::size_t n = pick(gen, 1, 8);
    const Arch arch = kArchs[s % 3];
    const ModelConfig c = random_engine(gen, arch, n);
    const perfsim::Topology topo = random_topology(gen, n);
    perfsim::ScheduleOptions opt;
    opt.overlap = gen() % 2 == 0;
    const auto trace = perfsim::simulate(perfsim::build_schedule(c, topo, pick(gen, 1, 2048), opt), topo,
                                         random_device(gen));
    double max_end = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
      std::array<std::vector<perfsim::OpSpan>, 2> by_stream;
      for (const auto& op : trace.schedule.devices[d]) {
        const auto& sp = trace.spans[d][op.id];
        max_end = std::max(max_end, sp.end);
        for (std::size_t dep : op.depends_on) EXPECT_LE(trace.spans[d][dep].end, sp.start);
        by_stream[static_cast<std::size_t>(op.stream)].push_back(sp);
      }
      for (auto& spans : by_stream) {
        std::sort(spans.begin(), spans.end(), [](auto& a, auto& b) {
          return a.start != b.start ? a.start < b.start : a.end < b.end;
        });
        for (std::size_t k = 1; k < spans.size(); ++k) EXPECT_LE(spans[k - 1].end, spans[k].start);
      }
    }
    EXPECT_EQ(trace.ttft, max_end);
    const auto& sched = trace.schedule;
    const std::size_t ar = sched.count(perfsim::OpKind::ALLREDUCE), ag = sched.count(perfsim::OpKind::ALLGATHER);
    const std::size_t expect_ar = arch == Arch::Standard ? 2 * c.layers
                                  : arch == Arch::ParallelBlock ? c.layers
                                                                : c.layers - 1;
    EXPECT_EQ(ar, expect_ar) << "seed " << s;
    EXPECT_EQ(ag, arch == Arch::Kraken ? 1u : 0u);
  }
}

TEST(Perfsim, HidingBoundClosedForm) {
  using perfsim::OpKind;
  using perfsim::SimOp;
  for (int s = 0; s < 100; ++s) {
    std::mt19937_64 gen(s);
    const double t_prev = uniform(gen, 0.0, 2.0), t_mha = uniform(gen, 0.0, 3.0);
    const double t_ar = uniform(gen, 0.0, 6.0), t_tail = uniform(gen, 0.0, 2.0);
    auto mk = [](std::size_t id, OpKind kind, double v, std::vector<std::size_t> deps,
                 perfsim::Stream st = perfsim::Stream::Compute) {
      SimOp o;
      o.id = id;
      o.kind = kind;
      (perfsim::is_collective(kind) ? o.comm_bytes : o.flops) = v;
      o.depends_on = std::move(deps);
      o.stream = st;
      return o;
    };
    perfsim::Schedule sched;
    sched.arch = Arch::Kraken;
    sched.overlap = true;
    sched.devices.assign(2, {mk(0, OpKind::FFN2_GEMM, t_prev, {}),
                             mk(1, OpKind::ALLREDUCE, t_ar, {0}, perfsim::Stream::Collective),
                             mk(2, OpKind::QKV_GEMM, t_mha, {0}),
                             mk(3, OpKind::FFN1_GEMM, t_tail, {1, 2})});
    const perfsim::Topology topo{2, 1.0, 0.0};
    const auto trace = perfsim::simulate(sched, topo, {1.0, 1e300, 1.0});
    const double exposed = std::max(0.0, t_ar - t_mha);
    EXPECT_NEAR(perfsim::exposed_collective_time(trace, 0), exposed, 1e-9) << "seed " << s;
    EXPECT_NEAR(trace.ttft, t_prev + t_mha + exposed + t_tail, 1e-9) << "seed " << s;
  }
}

TEST(Perfsim, TtftMonotoneInContextAndWidth) {
  for (int s = 0; s < 30; ++s) {
    std::mt19937_64 gen(s);
    const std::size_t n = std::size_t{1} << pick(gen, 0, 3);
    const Arch arch = kArchs[s % 3];
    const ModelConfig c = random_engine(gen, arch, n);
    const perfsim::Topology topo = random_topology(gen, n);
    const perfsim::DeviceSpec dev = random_device(gen);
    auto ttft = [&](const ModelConfig& m, std::size_t ctx) {
      return perfsim::simulate(perfsim::build_schedule(m, topo, ctx), topo, dev).ttft;
    };
    const std::size_t c1 = pick(gen, 1, 2048), c2 = c1 + pick(gen, 0, 2048);
    EXPECT_LE(ttft(c, c1), ttft(c, c2)) << "seed " << s;
    ModelConfig wider = c;
    wider.d_model += c.heads * 8;
    EXPECT_LE(ttft(c, c1), ttft(wider, c1)) << "seed " << s;
  }
}

// io

TEST(Io, CheckpointRoundTripIsBitExact) {
  for (int s = 0; s < kCases; ++s) {
    std::mt19937_64 gen(s);
    const ModelWeights w = noisy_weights(random_config(gen, kArchs[s % 3], 3), gen);
    const ModelWeights back = io::decode_checkpoint(io::encode_checkpoint(w));
    EXPECT_EQ(back.config, w.config);
    std::vector<Tensor> a, b;
    for_each_parameter(w, [&](const std::string&, const Tensor& t) { a.push_back(t); });
    for_each_parameter(back, [&](const std::string&, const Tensor& t) { b.push_back(t); });
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_TRUE(bit_equal(a[k], b[k])) << "seed " << s;
  }
}

TEST(Io, RunConfigRoundTrip) {
  for (int s = 0; s < 100; ++s) {
    std::mt19937_64 gen(s);
    io::RunConfig rc;
    if (gen() % 2) rc.model = random_config(gen, kArchs[s % 3]);
    if (gen() % 2) rc.topology.n = pick(gen, 1, 16);
    if (gen() % 2) rc.topology.link_bw = log_uniform(gen, 1e8, 1e13);
    if (gen() % 2) rc.topology.base_latency = log_uniform(gen, 1e-9, 1e-2);
    if (gen() % 2) rc.device.flops_per_sec = log_uniform(gen, 1e12, 1e16);
    if (gen() % 2) rc.device.efficiency = uniform(gen, 0.01, 1.0);
    for (std::size_t k = pick(gen, 0, 3); k > 0; --k) rc.experiment.contexts.push_back(pick(gen, 1, 4096));
    for (std::size_t k = pick(gen, 0, 3); k > 0; --k) rc.experiment.seeds.push_back(gen());
    rc.experiment.output_dir = "out" + std::to_string(pick(gen, 0, 99));
    rc.train.learning_rate = uniform(gen, 1e-4, 1.0);
    rc.train.steps = pick(gen, 1, 10000);
    EXPECT_EQ(io::parse_run_config(io::serialize_run_config(rc)), rc) << "seed " << s;
  }
}

}  // namespace
}  // namespace kraken
