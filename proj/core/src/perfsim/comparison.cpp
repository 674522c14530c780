#include "kraken/perfsim/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <sstream>

#include "kraken/numerics/errors.hpp"

namespace kraken::perfsim {

Calibration default_calibration() {
  Calibration c;
  c.device = {3.12e14, 1.04398e12, 0.701471};
  c.link_bw = 1.30938e11;
  c.base_latency = 9.12427e-05;
  c.memcopy_copies = 2.0;
  return c;
}

std::vector<GridPoint> reference_grid() {
  std::vector<GridPoint> grid;
  for (const auto& ref : latency_references())
    grid.push_back({std::string(ref.size), ref.context, ref.parallelism});
  return grid;
}

double ComparisonRow::speedup_reduction() const {
  return 1.0 - get(Arch::Kraken).ttft_s / get(Arch::Standard).ttft_s;
}

double ComparisonRow::speedup_ratio() const {
  return get(Arch::Standard).ttft_s / get(Arch::Kraken).ttft_s;
}

bool ComparisonRow::ordering_holds() const {
  return get(Arch::Kraken).ttft_s < get(Arch::ParallelBlock).ttft_s &&
         get(Arch::ParallelBlock).ttft_s < get(Arch::Standard).ttft_s;
}

ComparisonRow compare_point(const GridPoint& point, const Calibration& calibration) {
  calibration.device.validate();
  const Topology topo{point.parallelism, calibration.link_bw, calibration.base_latency};
  topo.validate();
  const auto& preset = engine_preset(point.size);
  const auto ref = find_latency_reference(point.size, point.context, point.parallelism);

  ComparisonRow row;
  row.point = point;
  for (Arch arch : {Arch::Standard, Arch::ParallelBlock, Arch::Kraken}) {
    const ModelConfig config = engine_config(preset, arch, point.parallelism);
    ScheduleOptions options;
    options.memcopy_copies = calibration.memcopy_copies;
    options.overlap = true;
    const SimTrace trace =
        simulate(build_schedule(config, topo, point.context, options), topo, calibration.device);

    ArchResult& r = row.archs[static_cast<std::size_t>(arch)];
    r.arch = arch;
    r.ttft_s = trace.ttft;
    r.breakdown = breakdown(trace);
    r.ttft_no_overlap_s = trace.ttft;
    if (arch == Arch::Kraken) {
      options.overlap = false;
      r.ttft_no_overlap_s =
          simulate(build_schedule(config, topo, point.context, options), topo, calibration.device)
              .ttft;
    }
    if (ref) {
      const double ms = arch == Arch::Standard        ? ref->standard_ms
                        : arch == Arch::ParallelBlock ? ref->parallel_block_ms
                                                      : ref->kraken_ms;
      r.reference_ms = ms / ref->layer_fraction;
    }
  }
  return row;
}

std::vector<ComparisonRow> ttft_comparison(const std::vector<GridPoint>& grid,
                                           const Calibration& calibration) {
  std::vector<ComparisonRow> rows;
  rows.reserve(grid.size());
  for (const auto& p : grid) rows.push_back(compare_point(p, calibration));
  return rows;
}

double geomean_speedup_ratio(const std::vector<ComparisonRow>& rows) {
  if (rows.empty()) return 1.0;
  double log_sum = 0.0;
  for (const auto& r : rows) log_sum += std::log(r.speedup_ratio());
  return std::exp(log_sum / static_cast<double>(rows.size()));
}

namespace {

// Grid order: model size as listed in the preset table, then context, then n.
std::vector<const ComparisonRow*> stable_order(const std::vector<ComparisonRow>& rows) {
  auto size_rank = [](const std::string& name) {
    const auto presets = engine_presets();
    for (std::size_t k = 0; k < presets.size(); ++k)
      if (presets[k].name == name) return k;
    return presets.size();
  };
  std::vector<const ComparisonRow*> order;
  for (const auto& r : rows) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(), [&](const ComparisonRow* a, const ComparisonRow* b) {
    const auto ka = std::tuple(size_rank(a->point.size), a->point.context, a->point.parallelism);
    const auto kb = std::tuple(size_rank(b->point.size), b->point.context, b->point.parallelism);
    return ka < kb;
  });
  return order;
}

}  // namespace

std::string ttft_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "size,context,parallelism,arch,ttft_ms,ttft_no_overlap_ms,reference_ms,"
         "speedup_reduction,speedup_ratio\n";
  for (const auto* row : stable_order(rows)) {
    const double standard = row->get(Arch::Standard).ttft_s;
    for (const auto& r : row->archs) {
      out << row->point.size << ',' << row->point.context << ',' << row->point.parallelism << ','
          << kraken::to_string(r.arch) << ',' << r.ttft_s * 1e3 << ',' << r.ttft_no_overlap_s * 1e3
          << ',';
      if (r.reference_ms) out << *r.reference_ms;
      out << ',' << 1.0 - r.ttft_s / standard << ',' << standard / r.ttft_s << '\n';
    }
  }
  return out.str();
}

std::string breakdown_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "size,context,parallelism,arch,category,seconds,percent\n";
  for (const auto* row : stable_order(rows)) {
    for (const auto& r : row->archs) {
      for (Category c : kCategories) {
        out << row->point.size << ',' << row->point.context << ',' << row->point.parallelism << ','
            << kraken::to_string(r.arch) << ',' << to_string(c) << ',' << r.breakdown.get(c) << ','
            << r.breakdown.percent(c) << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace kraken::perfsim
