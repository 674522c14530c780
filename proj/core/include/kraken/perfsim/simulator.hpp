#pragma once

#include <string>
#include <vector>

#include "kraken/perfsim/schedule.hpp"

namespace kraken::perfsim {

struct OpSpan {
  double start = 0.0;
  double end = 0.0;
};

struct SimTrace {
  Schedule schedule;
  std::vector<std::vector<OpSpan>> spans;  // [device][op id]
  double ttft = 0.0;

  std::size_t critical_device() const;
};

double op_duration(const SimOp& op, const Topology& topo, const DeviceSpec& dev);

// List-scheduling engine over in-order streams. Throws ConfigError when the
// dependency graph cannot make progress.
SimTrace simulate(const Schedule& schedule, const Topology& topo, const DeviceSpec& dev);

// Time on `device` during which the compute stream is idle while a
// collective is in flight, plus collectives run on the compute stream.
double exposed_collective_time(const SimTrace& trace, std::size_t device);

// Line-delimited JSON: {device, op_id, kind, start_s, end_s, stream}.
std::string export_trace(const SimTrace& trace);

}  // namespace kraken::perfsim
