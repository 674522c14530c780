#include "kraken/perfsim/breakdown.hpp"

#include <algorithm>

namespace kraken::perfsim {
namespace {

Category categorize(const SimOp& op, const Schedule& schedule) {
  switch (op.kind) {
    case OpKind::ALLREDUCE:
    case OpKind::ALLGATHER: return Category::AllReduce;
    case OpKind::ATTN: return Category::Attention;
    case OpKind::FFN1_GEMM:
    case OpKind::FFN2_GEMM: return Category::FfnGemms;
    case OpKind::QKV_GEMM:
    case OpKind::WO_GEMM:
      return schedule.arch == Arch::Kraken && schedule.overlap ? Category::OverlappedGemm
                                                               : Category::Other;
    default: return Category::Other;
  }
}

}  // namespace

std::string_view to_string(Category category) {
  switch (category) {
    case Category::AllReduce: return "AllReduce";
    case Category::OverlappedGemm: return "Overlapped GEMM";
    case Category::Attention: return "Attention";
    case Category::FfnGemms: return "FFN GEMMs";
    case Category::Other: return "Other";
  }
  return "Other";
}

double Breakdown::percent(Category c) const { return total > 0.0 ? 100.0 * get(c) / total : 0.0; }

Breakdown breakdown(const SimTrace& trace) {
  Breakdown b;
  if (trace.spans.empty()) return b;
  const std::size_t dev = trace.critical_device();
  const auto& ops = trace.schedule.devices[dev];
  const auto& spans = trace.spans[dev];
  auto add = [&](Category c, double t) { b.seconds[static_cast<std::size_t>(c)] += t; };

  struct Busy {
    double start, end;
    Category category;
  };
  std::vector<Busy> compute;
  std::vector<std::pair<double, double>> collectives;
  for (const auto& op : ops) {
    const auto& s = spans[op.id];
    if (op.stream == Stream::Compute) compute.push_back({s.start, s.end, categorize(op, trace.schedule)});
    else collectives.emplace_back(s.start, s.end);
  }
  std::sort(compute.begin(), compute.end(), [](const Busy& a, const Busy& b) { return a.start < b.start; });

  // Split an idle gap into the part covered by a collective and the rest.
  auto idle = [&](double lo, double hi) {
    if (hi <= lo) return;
    std::vector<std::pair<double, double>> cover;
    for (const auto& [s, e] : collectives) {
      const double a = std::max(s, lo), z = std::min(e, hi);
      if (z > a) cover.emplace_back(a, z);
    }
    std::sort(cover.begin(), cover.end());
    double covered = 0.0, reach = lo;
    for (const auto& [a, z] : cover) {
      const double from = std::max(a, reach);
      if (z > from) {
        covered += z - from;
        reach = z;
      }
    }
    add(Category::AllReduce, covered);
    add(Category::Other, (hi - lo) - covered);
  };

  double cursor = 0.0;
  for (const auto& c : compute) {
    idle(cursor, c.start);
    add(c.category, c.end - c.start);
    cursor = std::max(cursor, c.end);
  }
  idle(cursor, trace.ttft);
  for (double s : b.seconds) b.total += s;
  return b;
}

}  // namespace kraken::perfsim
