// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kraken/app/commands.hpp"
#include "kraken/app/train_toy.hpp"
#include "kraken/app/verify.hpp"
#include "kraken/inference/memory.hpp"
#include "kraken/io/run_config.hpp"
#include "kraken/model/forward.hpp"
#include "kraken/model/presets.hpp"
#include "kraken/parallel/device_group.hpp"
#include "kraken/parallel/equivalence.hpp"
#include "kraken/parallel/kraken_distributed.hpp"
#include "kraken/parallel/megatron.hpp"
#include "kraken/perfsim/comparison.hpp"
#include "kraken/perfsim/schedule.hpp"
#include "kraken/perfsim/simulator.hpp"

namespace {

using namespace kraken;

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int number;
  std::string name;
  double limit_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

Outcome parameter_accounting() {
  double worst = 0.0;
  std::string where;
  auto check = [&](const ModelConfig& c, double reported, const std::string& label) {
    const double got = static_cast<double>(count_params(c, ParamScope::PerLayer));
    const double rel = std::abs(got - reported) / reported;
    if (rel > worst) {
      worst = rel;
      where = label;
    }
  };
  int cells = 0;
  for (const EnginePreset& p : engine_presets()) {
    check(engine_config(p, Arch::Standard, 1), p.reported_params_per_layer, std::string(p.name));
    ++cells;
    for (std::size_t n : {4, 8}) {
      check(engine_config(p, Arch::Kraken, n), p.kraken(n).reported_params_per_layer,
            std::string(p.name) + "/" + std::to_string(n) + "-way");
      ++cells;
    }
  }
  return {worst <= 0.005, std::to_string(cells) + " cells, worst rel error " + fmt("%.4f", worst) +
                              " at " + where + " (limit 0.005)"};
}

Outcome dimension_solver() {
  bool ok = true;
  double worst_roundtrip = 0.0;
  std::mt19937_64 gen(2);
  for (int k = 0; k < 500; ++k) {
    ModelConfig c;
    c.arch = Arch::Kraken;
    c.d_model = std::uniform_int_distribution<std::size_t>(1, 20000)(gen);
    c.parallelism = std::uniform_int_distribution<std::size_t>(1, 8)(gen);
    c.layers = std::uniform_int_distribution<std::size_t>(1, 96)(gen);
    c.vocab = std::uniform_int_distribution<std::size_t>(0, 60000)(gen);
    const double p = static_cast<double>(count_params(c));
    const double d = derive_kraken_dim(p, c.parallelism, c.layers, c.vocab);
    worst_roundtrip = std::max(worst_roundtrip, std::abs(d - static_cast<double>(c.d_model)));
  }
  ok = ok && worst_roundtrip <= 1e-6;
  const ModelConfig std67 = engine_config(engine_preset("6.7B"), Arch::Standard, 1);
  const double d67 = derive_kraken_dim(static_cast<double>(count_params(std67)), 4, 32, kEngineVocab,
                                       DimRounding::multiple_of(64));
  const double d124 = derive_kraken_dim(124e6, 2, 12, kTrainingVocab, DimRounding::multiple_of(8));
  ok = ok && std::abs(d67 - 2496.0) <= 64.0 && std::abs(d124 - 678.0) <= 8.0;
  return {ok, "round-trip max |d - d0| " + fmt("%.2e", worst_roundtrip) + " over 500 targets; 6.7B/4-way q=64 -> " +
                  fmt("%.0f", d67) + " (paper 2496); 124M/2-way q=8 -> " + fmt("%.0f", d124) + " (paper 678)"};
}

Outcome megatron_equivalence() {
  double worst = 0.0, agreement = 1.0;
  int cases = 0;
  std::mt19937_64 gen(3);
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(gen); };
  for (Arch arch : {Arch::Standard, Arch::ParallelBlock})
    for (std::size_t n : {1, 2, 4})
      for (int rep = 0; rep < 6; ++rep) {
        ModelConfig c;
        c.arch = arch;
        c.layers = pick(1, 4);
        c.heads = n * pick(1, 4 / n);
        c.d_model = c.heads * 4 * pick(1, 64 / (c.heads * 4));
        c.vocab = pick(8, 64);
        c.context = 16;
        ModelWeights w = init_weights(c, Rng(gen()));
        std::normal_distribution<double> noise(0.0, 0.05);
        for_each_parameter(w, [&](const std::string&, Tensor& t) {
          for (double& v : t.data()) v += noise(gen);
        });
        const auto tokens = app::random_tokens(pick(1, 16), c.vocab, gen());
        const auto r = app::megatron_equivalence(w, n, tokens);
        worst = std::max(worst, r.max_rel);
        agreement = std::min(agreement, r.argmax_row_agreement);
        ++cases;
      }
  return {worst <= 1e-10 && agreement == 1.0,
          std::to_string(cases) + " configs (L<=4, d<=64, n in {1,2,4}), max rel " + fmt("%.2e", worst) +
              " (limit 1e-10), argmax agreement " + fmt("%.3f", agreement)};
}

ModelConfig tiny_kraken(std::size_t layers, std::size_t n) {
  ModelConfig c = app::tiny_config();
  c.layers = layers;
  c.parallelism = n;
  return c;
}

Outcome sublayer_independence() {
  const ModelConfig c = tiny_kraken(4, 4);
  const ModelWeights w = init_weights(c, Rng(4));
  const auto r = app::sublayer_independence(w, app::random_tokens(16, c.vocab, 4));
  const bool ok = r.cross_device_max_delta == 0.0 && r.own_device_min_delta > 0.0 && r.combinations == 3 * 4 * 3;
  return {ok, std::to_string(r.combinations) + " (layer, device pair) combinations, cross-device MHA delta " +
                  fmt("%.1e", r.cross_device_max_delta) + ", own-stream delta min " +
                  fmt("%.2e", r.own_device_min_delta)};
}

Outcome gradient_checks() {
  double worst = 0.0;
  std::string where;
  std::size_t count = 0;
  for (std::uint64_t seed : {5, 6}) {
    for (const auto& g : app::gradient_check_sublayer(app::tiny_config(), seed, 6, 1e-5)) {
      ++count;
      if (g.rel_error >= worst) {
        worst = g.rel_error;
        where = g.parameter;
      }
    }
  }
  return {count == 24 && worst <= 1e-5, std::to_string(count) + " parameter tensors, worst rel error " +
                                            fmt("%.2e", worst) + " (" + where + ", limit 1e-5)"};
}

Outcome prefix_consistency() {
  double worst = 0.0;
  for (std::size_t n : {1, 2}) {
    const ModelConfig c = tiny_kraken(2, n);
    const ModelWeights w = init_weights(c, Rng(6 + n));
    worst = std::max(worst, app::prefix_consistency_error(w, app::random_tokens(64, c.vocab, 6)));
  }
  ModelConfig s = app::tiny_config();
  s.arch = Arch::Standard;
  s.parallelism = 1;
  worst = std::max(worst, app::prefix_consistency_error(init_weights(s, Rng(9)), app::random_tokens(64, s.vocab, 9)));
  return {worst <= 1e-10, "64-token sequences, every prefill/decode split, worst rel error " + fmt("%.2e", worst) +
                              " (limit 1e-10)"};
}

Outcome collective_census() {
  bool ok = true;
  std::ostringstream detail;
  const perfsim::Topology topo{4, 1e11, 1e-5};
  for (std::size_t layers : {1, 3, 4}) {
    ModelConfig c = app::tiny_config();
    c.layers = layers;
    c.parallelism = 1;
    const auto tokens = app::random_tokens(5, c.vocab, 7);
    for (Arch arch : {Arch::Standard, Arch::ParallelBlock}) {
      c.arch = arch;
      parallel::DeviceGroup g(4);
      parallel::run_sharded_standard(tokens, parallel::shard_standard(init_weights(c, Rng(1)), 4), g);
      const std::size_t want = arch == Arch::Standard ? 2 * layers : layers;
      const std::size_t sim = perfsim::build_schedule(c, topo, 5).count(perfsim::OpKind::ALLREDUCE);
      ok = ok && g.count(parallel::CollectiveKind::AllReduce) == want && g.log().size() == want && sim == want;
    }
    c.arch = Arch::Kraken;
    c.parallelism = 4;
    parallel::DeviceGroup g(4);
    parallel::run_kraken_distributed(tokens, init_weights(c, Rng(1)), g);
    const auto sched = perfsim::build_schedule(c, topo, 5);
    ok = ok && g.count(parallel::CollectiveKind::AllReduce) == layers - 1 &&
         g.count(parallel::CollectiveKind::AllGather) == 1 && g.log().size() == layers &&
         sched.count(perfsim::OpKind::ALLREDUCE) == layers - 1 && sched.count(perfsim::OpKind::ALLGATHER) == 1;
    detail << "L=" << layers << ": std " << 2 * layers << " AR, par " << layers << " AR, kraken " << layers - 1
           << " AR + 1 AG; ";
  }
  detail << "logs and simulator schedules agree";
  return {ok, detail.str()};
}

Outcome kv_cache_arithmetic() {
  using inference::AttentionVariant;
  const EnginePreset& p13 = engine_preset("13B");
  const auto standard = inference::kv_bytes(engine_config(p13, Arch::Standard, 1), AttentionVariant::mha(), 32, 2048);
  const auto kraken4 = inference::kv_bytes(engine_config(p13, Arch::Kraken, 4), AttentionVariant::mha(), 32, 2048);
  bool mqa_smaller = true;
  for (const EnginePreset& p : engine_presets())
    for (std::size_t n : {4, 8}) {
      const ModelConfig c = engine_config(p, Arch::Kraken, n);
      mqa_smaller = mqa_smaller && inference::kv_bytes(c, AttentionVariant::mqa(), 32, 2048) <
                                       inference::kv_bytes(c, AttentionVariant::mha(), 32, 2048);
    }
  return {standard == 1347682304ull && kraken4 == 3271557120ull && mqa_smaller,
          "standard-13B " + std::to_string(standard) + " B, kraken-4way-13B " + std::to_string(kraken4) +
              " B, MQA < MHA for all 10 Kraken rows: " + (mqa_smaller ? "yes" : "no") +
              (standard == 1347682304ull ? ""
                                         : "; target 1347682304 = 2*32*2048*5141*2, table width is 5140")};
}

Outcome simulator_orderings() {
  const auto rows = perfsim::ttft_comparison(perfsim::reference_grid(), perfsim::default_calibration());
  std::size_t ordered = 0, overlap_strict = 0;
  for (const auto& r : rows) {
    ordered += r.ordering_holds() ? 1 : 0;
    const auto& k = r.get(Arch::Kraken);
    overlap_strict += k.ttft_s < k.ttft_no_overlap_s ? 1 : 0;
  }
  const bool ok = rows.size() == 20 && ordered == 20 && overlap_strict == 20;
  return {ok, std::to_string(ordered) + "/" + std::to_string(rows.size()) +
                  " points kraken < parallel < standard, overlap strictly faster at " + std::to_string(overlap_strict) +
                  "/" + std::to_string(rows.size()) + ", geomean speedup ratio " +
                  fmt("%.3f", perfsim::geomean_speedup_ratio(rows))};
}

Outcome hiding_bound() {
  using perfsim::OpKind;
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  const perfsim::DeviceSpec dev{1e12, 1e300, 1.0};
  int cases = 0;
  for (std::size_t n : {2, 4, 8})
    for (int rep = 0; rep < 100; ++rep) {
      const perfsim::Topology topo{n, 1e9 * (0.1 + u(gen)), 1e-5 * u(gen)};
      auto op = [](std::size_t id, OpKind kind, double flops, double comm, std::vector<std::size_t> deps,
                   perfsim::Stream stream) {
        perfsim::SimOp o;
        o.id = id;
        o.kind = kind;
        o.flops = flops;
        o.comm_bytes = comm;
        o.depends_on = std::move(deps);
        o.stream = stream;
        o.layer = 0;
        return o;
      };
      const auto C = perfsim::Stream::Compute;
      // FFN2 of layer i, its AllReduce, the next layer's MHA phase, then its FFN.
      const std::vector<perfsim::SimOp> ops{
          op(0, OpKind::FFN2_GEMM, 1e9 * u(gen), 0, {}, C),
          op(1, OpKind::ALLREDUCE, 0, 2e7 * u(gen), {0}, perfsim::Stream::Collective),
          op(2, OpKind::LN, 1e8 * u(gen), 0, {0}, C),
          op(3, OpKind::QKV_GEMM, 5e9 * u(gen), 0, {2}, C),
          op(4, OpKind::ATTN, 5e9 * u(gen), 0, {3}, C),
          op(5, OpKind::WO_GEMM, 5e9 * u(gen), 0, {4}, C),
          op(6, OpKind::LN, 1e8 * u(gen), 0, {5, 1}, C),
          op(7, OpKind::FFN1_GEMM, 1e9 * u(gen), 0, {6}, C)};
      perfsim::Schedule s;
      s.arch = Arch::Kraken;
      s.overlap = true;
      s.devices.assign(n, ops);
      const auto trace = perfsim::simulate(s, topo, dev);
      const double t_ar = perfsim::op_duration(ops[1], topo, dev);
      double t_mha = 0.0;
      for (std::size_t k = 2; k <= 5; ++k) t_mha += perfsim::op_duration(ops[k], topo, dev);
      const double closed = std::max(0.0, t_ar - t_mha);
      worst = std::max(worst, std::abs(perfsim::exposed_collective_time(trace, 0) - closed));
      ++cases;
    }
  return {worst <= 1e-9, std::to_string(cases) + " synthetic layers, max |exposed - max(0, t_AR - t_MHA)| " +
                             fmt("%.2e", worst) + " s (limit 1e-9)"};
}

Outcome toy_training() {
  const io::RunConfig rc = io::load_run_config(std::filesystem::path(KRAKEN_CONFIG_DIR) / "tiny.json");
  const ModelConfig c = rc.model ? *rc.model : app::tiny_config();
  const std::uint64_t seed = rc.experiment.seeds.empty() ? 0 : rc.experiment.seeds.front();
  const auto a = app::train_toy(c, rc.train, seed);
  const auto b = app::train_toy(c, rc.train, seed);
  const double ratio = a.final_eval / a.initial_eval;
  const bool deterministic = a.step_loss == b.step_loss && a.final_eval == b.final_eval;
  return {rc.train.task == "copy" && rc.train.steps <= 500 && ratio <= 0.5 && deterministic,
          "copy task, " + std::to_string(rc.train.steps) + " steps, eval loss " + fmt("%.3f", a.initial_eval) +
              " -> " + fmt("%.3f", a.final_eval) + " (ratio " + fmt("%.3f", ratio) + ", limit 0.5), repeat run " +
              (deterministic ? "identical" : "DIFFERS")};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "parameter accounting", 1.0, parameter_accounting},
      {2, "dimension solver", 1.0, dimension_solver},
      {3, "megatron equivalence", 30.0, megatron_equivalence},
      {4, "sub-layer independence", 10.0, sublayer_independence},
      {5, "gradient checks", 60.0, gradient_checks},
      {6, "prefill/decode consistency", 30.0, prefix_consistency},
      {7, "collective census", 60.0, collective_census},
      {8, "kv-cache arithmetic", 60.0, kv_cache_arithmetic},
      {9, "simulator orderings", 300.0, simulator_orderings},
      {10, "overlap hiding bound", 60.0, hiding_bound},
      {11, "toy training", 300.0, toy_training},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.passed && in_time;
    failed += pass ? 0 : 1;
    std::printf("%s %2d %s: %s [%.2f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", c.number, c.name.c_str(),
                o.detail.c_str(), secs, c.limit_s, in_time ? "" : ", TOO SLOW");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
