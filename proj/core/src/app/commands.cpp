#include "kraken/app/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "kraken/app/train_toy.hpp"
#include "kraken/app/verify.hpp"
#include "kraken/inference/memory.hpp"
#include "kraken/io/checkpoint.hpp"
#include "kraken/io/csv.hpp"
#include "kraken/model/presets.hpp"
#include "kraken/numerics/errors.hpp"
#include "kraken/perfsim/comparison.hpp"

namespace kraken::app {

ModelConfig tiny_config() {
  ModelConfig c;
  c.arch = Arch::Kraken;
  c.layers = 2;
  c.d_model = 32;
  c.parallelism = 2;
  c.heads = 4;
  c.vocab = 64;
  c.context = 64;
  return c;
}

std::uint64_t resolve_seed(const GlobalOptions& global, const io::RunConfig& config) {
  if (global.seed) return *global.seed;
  if (!config.experiment.seeds.empty()) return config.experiment.seeds.front();
  return 0;
}

io::RunConfig load_config(const GlobalOptions& global) {
  return global.config ? io::load_run_config(*global.config) : io::RunConfig{};
}

int cmd_derive(const GlobalOptions& global, const DeriveOptions& o, std::ostream& out) {
  if (o.check_presets) {
    std::ostringstream csv;
    csv << "size,parallelism,d_model,params_per_layer,reported,rel_error\n";
    bool ok = true;
    for (const auto& p : engine_presets()) {
      for (std::size_t n : {4, 8}) {
        const ModelConfig c = engine_config(p, Arch::Kraken, n);
        const double got = static_cast<double>(count_params(c, ParamScope::PerLayer));
        const double reported = p.kraken(n).reported_params_per_layer;
        const double rel = std::abs(got - reported) / reported;
        ok = ok && rel <= 0.005;
        csv << p.name << ',' << n << ',' << c.d_model << ',' << got << ',' << reported << ','
            << rel << '\n';
      }
    }
    io::write_file_atomic(global.out / "preset_check.csv", csv.str());
    out << csv.str() << (ok ? "all presets within 0.5%\n" : "preset mismatch above 0.5%\n");
    return ok ? 0 : 1;
  }

  if (!(o.params > 0.0)) throw ConfigError("--params must be positive");
  const double exact = derive_kraken_dim(o.params, o.parallelism, o.layers, o.vocab);
  const double chosen = derive_kraken_dim(o.params, o.parallelism, o.layers, o.vocab,
                                          DimRounding::multiple_of(o.multiple));
  ModelConfig c;
  c.arch = Arch::Kraken;
  c.layers = o.layers;
  c.parallelism = o.parallelism;
  c.vocab = o.vocab;
  c.context = kEngineContext;
  c.d_model = static_cast<std::size_t>(std::llround(chosen));
  if (c.d_model == 0) throw ConfigError("derived d_model rounds to zero");
  c.heads = o.heads ? *o.heads : (c.d_model % 64 == 0 ? c.d_model / 64 : 1);
  c.validate();
  const double achieved = static_cast<double>(count_params(c));
  const double rel = (achieved - o.params) / o.params;

  io::RunConfig rc = io::with_default_calibration({});
  rc.model = c;
  rc.topology.n = c.parallelism;
  io::save_run_config(global.out / "derived_config.json", rc);

  out << std::setprecision(10) << "exact_d=" << exact << "\n"
      << "d_model=" << c.d_model << " heads=" << c.heads << "\n"
      << "achieved_params=" << achieved << " target=" << o.params << " rel_error=" << rel << "\n"
      << "per_layer_params=" << count_params(c, ParamScope::PerLayer) << "\n"
      << "wrote " << (global.out / "derived_config.json").string() << "\n";
  return 0;
}

int cmd_verify(const GlobalOptions& global, const VerifyOptions& o, std::ostream& out) {
  const io::RunConfig rc = load_config(global);
  const std::uint64_t seed = resolve_seed(global, rc);
  const auto start = std::chrono::steady_clock::now();
  VerifyReport report;
  if (o.checkpoint) {
    const ModelWeights w = io::load_checkpoint(*o.checkpoint);
    report = run_verify(w.config, seed, &w);
  } else {
    report = run_verify(rc.model ? *rc.model : tiny_config(), seed);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::string text = report.to_text();
  io::write_file_atomic(global.out / "verify_report.txt", text);
  out << text << (report.passed() ? "verify: all checks passed" : "verify: FAILED") << " in "
      << std::fixed << std::setprecision(2) << secs << " s\n";
  return report.passed() ? 0 : 1;
}

int cmd_simulate(const GlobalOptions& global, std::ostream& out) {
  const io::RunConfig rc = load_config(global);
  const perfsim::Calibration cal = io::require_calibration(rc);

  std::vector<perfsim::GridPoint> grid;
  const auto& e = rc.experiment;
  if (e.sizes.empty()) {
    grid = perfsim::reference_grid();
  } else {
    const std::vector<std::size_t> contexts = e.contexts.empty() ? std::vector<std::size_t>{128, 2048} : e.contexts;
    const std::vector<std::size_t> ns = e.parallelism.empty() ? std::vector<std::size_t>{4, 8} : e.parallelism;
    for (const auto& s : e.sizes)
      for (std::size_t ctx : contexts)
        for (std::size_t n : ns) grid.push_back({s, ctx, n});
  }
  const auto rows = perfsim::ttft_comparison(grid, cal);
  io::write_file_atomic(global.out / "ttft.csv", perfsim::ttft_csv(rows));
  io::write_file_atomic(global.out / "breakdown.csv", perfsim::breakdown_csv(rows));

  for (std::size_t n : {4, 8}) {
    std::vector<perfsim::ComparisonRow> subset;
    for (const auto& r : rows)
      if (r.point.parallelism == n) subset.push_back(r);
    if (subset.empty()) continue;
    std::ostringstream speed;
    speed << "size,context,speedup_reduction,speedup_ratio\n";
    for (const auto& r : subset)
      speed << r.point.size << ',' << r.point.context << ',' << r.speedup_reduction() << ','
            << r.speedup_ratio() << '\n';
    const std::string tag = std::to_string(n) + "way";
    io::write_file_atomic(global.out / ("speedup_" + tag + ".csv"), speed.str());
    io::write_file_atomic(global.out / ("breakdown_" + tag + ".csv"), perfsim::breakdown_csv(subset));
  }

  std::ostringstream custom;
  if (rc.model) {
    const ModelConfig& m = *rc.model;
    const std::size_t n = m.arch == Arch::Kraken ? m.parallelism : rc.topology.n.value_or(1);
    const perfsim::Topology topo{n, cal.link_bw, cal.base_latency};
    custom << "arch,context,parallelism,ttft_ms\n";
    const std::vector<std::size_t> contexts = e.contexts.empty() ? std::vector<std::size_t>{128, 2048} : e.contexts;
    for (std::size_t ctx : contexts) {
      perfsim::ScheduleOptions so;
      so.memcopy_copies = cal.memcopy_copies;
      so.dtype_size = e.dtype_size;
      const auto trace = perfsim::simulate(perfsim::build_schedule(m, topo, ctx, so), topo, cal.device);
      custom << kraken::to_string(m.arch) << ',' << ctx << ',' << n << ',' << trace.ttft * 1e3 << '\n';
    }
    io::write_file_atomic(global.out / "model_ttft.csv", custom.str());
  }

  bool ok = true;
  out << std::fixed << std::setprecision(2);
  out << "size   ctx   n  standard_ms parallel_ms kraken_ms kraken_no_overlap_ms  ref(std/par/kraken)\n";
  for (const auto& r : rows) {
    const auto& s = r.get(Arch::Standard);
    const auto& p = r.get(Arch::ParallelBlock);
    const auto& k = r.get(Arch::Kraken);
    const bool overlap_ok = k.ttft_s < k.ttft_no_overlap_s;
    ok = ok && r.ordering_holds() && overlap_ok;
    out << std::setw(5) << r.point.size << ' ' << std::setw(5) << r.point.context << ' '
        << std::setw(2) << r.point.parallelism << ' ' << std::setw(12) << s.ttft_s * 1e3
        << std::setw(12) << p.ttft_s * 1e3 << std::setw(10) << k.ttft_s * 1e3 << std::setw(21)
        << k.ttft_no_overlap_s * 1e3;
    if (s.reference_ms)
      out << "  " << *s.reference_ms << '/' << *p.reference_ms << '/' << *k.reference_ms;
    out << (r.ordering_holds() && overlap_ok ? "" : "  ORDERING VIOLATED") << '\n';
  }
  out << std::setprecision(4) << "geomean speedup ratio " << perfsim::geomean_speedup_ratio(rows)
      << ", reduction " << 1.0 - 1.0 / perfsim::geomean_speedup_ratio(rows) << '\n'
      << (ok ? "orderings hold" : "orderings FAILED") << '\n';
  return ok ? 0 : 1;
}

int cmd_memory(const GlobalOptions& global, std::ostream& out) {
  const io::RunConfig rc = load_config(global);
  const auto& e = rc.experiment;
  const std::vector<std::size_t> seqlens =
      e.memory_seqlens.empty() ? std::vector<std::size_t>{512, 1024, 2048, 4096} : e.memory_seqlens;
  const std::size_t longest = *std::max_element(seqlens.begin(), seqlens.end());

  std::vector<inference::NamedConfig> configs;
  for (const char* name : {"13B", "65B", "175B"}) {
    const auto& p = engine_preset(name);
    auto add = [&](Arch arch, std::size_t n, std::string label) {
      ModelConfig c = engine_config(p, arch, n);
      c.context = std::max(c.context, longest);
      configs.push_back({std::move(label), c});
    };
    add(Arch::Standard, 1, std::string(name));
    add(Arch::Kraken, 4, std::string(name) + "-kraken4");
    add(Arch::Kraken, 8, std::string(name) + "-kraken8");
  }
  std::string csv;
  for (std::size_t k = 0; k < seqlens.size(); ++k) {
    const auto rows = inference::layer_memory_report(configs, e.memory_batch, seqlens[k], e.dtype_size);
    std::string part = inference::memory_report_csv(rows);
    if (k > 0) part.erase(0, part.find('\n') + 1);
    csv += part;
  }
  io::write_file_atomic(global.out / "memory.csv", csv);
  out << csv;
  return 0;
}

int cmd_train_toy(const GlobalOptions& global, const TrainOptions& o, std::ostream& out) {
  const io::RunConfig rc = load_config(global);
  io::TrainSection train = rc.train;
  if (o.task) train.task = *o.task;
  if (o.steps) train.steps = *o.steps;
  const ModelConfig config = rc.model ? *rc.model : tiny_config();
  if (count_params_full(config) > 500'000)
    throw ConfigError("toy training is limited to 0.5M parameters, config has " +
                      std::to_string(count_params_full(config)));
  const std::uint64_t seed = resolve_seed(global, rc);
  const TrainResult result = train_toy(config, train, seed);

  std::ostringstream csv;
  csv.precision(17);
  csv << "step,loss\n";
  for (std::size_t s = 0; s < result.step_loss.size(); ++s) csv << s << ',' << result.step_loss[s] << '\n';
  io::write_file_atomic(global.out / "train_loss.csv", csv.str());
  io::save_checkpoint(global.out / "toy.ckpt", result.weights);

  const double ratio = result.final_eval / result.initial_eval;
  out << std::setprecision(6) << "task=" << train.task << " steps=" << train.steps << " seed=" << seed
      << "\ninitial_eval_loss=" << result.initial_eval << " final_eval_loss=" << result.final_eval
      << " ratio=" << ratio << "\nwrote " << (global.out / "train_loss.csv").string() << " and "
      << (global.out / "toy.ckpt").string() << '\n';
  return 0;
}

}  // namespace kraken::app
