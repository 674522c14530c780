#include "kraken/perfsim/simulator.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kraken/numerics/errors.hpp"

namespace kraken::perfsim {
namespace {

constexpr double kUnscheduled = -1.0;

struct Interval {
  double start, end;
};

std::vector<Interval> merge(std::vector<Interval> v) {
  std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.start < b.start; });
  std::vector<Interval> out;
  for (const auto& iv : v) {
    if (iv.end <= iv.start) continue;
    if (!out.empty() && iv.start <= out.back().end) {
      out.back().end = std::max(out.back().end, iv.end);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

double measure(const std::vector<Interval>& merged) {
  double total = 0.0;
  for (const auto& iv : merged) total += iv.end - iv.start;
  return total;
}

double intersection(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  double total = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].start, b[j].start);
    const double hi = std::min(a[i].end, b[j].end);
    if (hi > lo) total += hi - lo;
    if (a[i].end < b[j].end) ++i; else ++j;
  }
  return total;
}

}  // namespace

double op_duration(const SimOp& op, const Topology& topo, const DeviceSpec& dev) {
  switch (op.kind) {
    case OpKind::ALLREDUCE: return allreduce_cost(op.comm_bytes, topo);
    case OpKind::ALLGATHER: return allgather_cost(op.comm_bytes, topo);
    default: return op_cost(op.flops, op.bytes_moved, dev);
  }
}

std::size_t SimTrace::critical_device() const {
  std::size_t best = 0;
  double best_end = -1.0;
  for (std::size_t dev = 0; dev < spans.size(); ++dev) {
    double end = 0.0;
    for (const auto& s : spans[dev]) end = std::max(end, s.end);
    if (end > best_end) {
      best_end = end;
      best = dev;
    }
  }
  return best;
}

SimTrace simulate(const Schedule& schedule, const Topology& topo, const DeviceSpec& dev) {
  check_schedule(schedule);
  const std::size_t n = schedule.devices.size();
  if (n != topo.n) {
    throw ConfigError("schedule spans " + std::to_string(n) + " devices, topology has " +
                      std::to_string(topo.n));
  }

  SimTrace trace;
  trace.schedule = schedule;
  trace.spans.resize(n);
  std::vector<std::array<std::vector<std::size_t>, 2>> queues(n);
  std::vector<std::array<std::size_t, 2>> heads(n, {0, 0});
  std::vector<std::array<double, 2>> free_at(n, {0.0, 0.0});
  std::size_t remaining = 0;
  for (std::size_t d = 0; d < n; ++d) {
    const auto& ops = schedule.devices[d];
    trace.spans[d].assign(ops.size(), {kUnscheduled, kUnscheduled});
    for (const auto& op : ops) queues[d][static_cast<std::size_t>(op.stream)].push_back(op.id);
    remaining += ops.size();
  }

  // Earliest start of op `id` on device `d`, or nullopt if a dependency is pending.
  auto ready_at = [&](std::size_t d, std::size_t id) -> std::optional<double> {
    const SimOp& op = schedule.devices[d][id];
    double t = free_at[d][static_cast<std::size_t>(op.stream)];
    for (std::size_t dep : op.depends_on) {
      const double end = trace.spans[d][dep].end;
      if (end == kUnscheduled) return std::nullopt;
      t = std::max(t, end);
    }
    return t;
  };
  auto head_of = [&](std::size_t d, std::size_t s) -> std::optional<std::size_t> {
    if (heads[d][s] >= queues[d][s].size()) return std::nullopt;
    return queues[d][s][heads[d][s]];
  };
  auto commit = [&](std::size_t d, std::size_t s, std::size_t id, double start, double end) {
    trace.spans[d][id] = {start, end};
    free_at[d][s] = end;
    ++heads[d][s];
    --remaining;
  };

  while (remaining > 0) {
    bool progressed = false;
    for (std::size_t d = 0; d < n; ++d) {
      for (std::size_t s = 0; s < 2; ++s) {
        while (auto id = head_of(d, s)) {
          const SimOp& op = schedule.devices[d][*id];
          if (!is_collective(op.kind)) {
            const auto start = ready_at(d, *id);
            if (!start) break;
            commit(d, s, *id, *start, *start + op_duration(op, topo, dev));
            progressed = true;
            continue;
          }
          double start = 0.0;
          bool all_ready = true;
          for (std::size_t p = 0; p < n && all_ready; ++p) {
            const auto peer_head = head_of(p, s);
            const auto t = peer_head == id ? ready_at(p, *id) : std::nullopt;
            if (!t) all_ready = false; else start = std::max(start, *t);
          }
          if (!all_ready) break;
          const double end = start + op_duration(op, topo, dev);
          for (std::size_t p = 0; p < n; ++p) commit(p, s, *id, start, end);
          progressed = true;
        }
      }
    }
    if (!progressed) throw ConfigError("schedule cannot progress: dependency cycle or deadlock");
  }

  for (const auto& device : trace.spans)
    for (const auto& span : device) trace.ttft = std::max(trace.ttft, span.end);
  return trace;
}

double exposed_collective_time(const SimTrace& trace, std::size_t device) {
  const auto& ops = trace.schedule.devices.at(device);
  const auto& spans = trace.spans.at(device);
  std::vector<Interval> collectives, busy;
  for (const auto& op : ops) {
    const Interval iv{spans[op.id].start, spans[op.id].end};
    if (is_collective(op.kind)) collectives.push_back(iv);
    else if (op.stream == Stream::Compute) busy.push_back(iv);
  }
  const auto c = merge(std::move(collectives));
  return measure(c) - intersection(c, merge(std::move(busy)));
}

std::string export_trace(const SimTrace& trace) {
  std::ostringstream out;
  for (std::size_t d = 0; d < trace.spans.size(); ++d) {
    for (const auto& op : trace.schedule.devices[d]) {
      const nlohmann::json rec = {{"device", d},
                                  {"op_id", op.id},
                                  {"kind", std::string(to_string(op.kind))},
                                  {"start_s", trace.spans[d][op.id].start},
                                  {"end_s", trace.spans[d][op.id].end},
                                  {"stream", std::string(to_string(op.stream))}};
      out << rec.dump() << '\n';
    }
  }
  return out.str();
}

}  // namespace kraken::perfsim
