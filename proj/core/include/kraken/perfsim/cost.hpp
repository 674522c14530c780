#pragma once

#include <cstddef>

namespace kraken::perfsim {

struct DeviceSpec {
  double flops_per_sec = 0.0;  // sustained matmul throughput
  double mem_bw = 0.0;         // bytes/s
  double efficiency = 1.0;     // in (0, 1]

  void validate() const;
};

// Ring collectives only.
struct Topology {
  std::size_t n = 1;
  double link_bw = 0.0;       // bytes/s
  double base_latency = 0.0;  // seconds per collective

  void validate() const;
  // link_bw = +inf, base_latency = 0.
  static Topology zero_comm(std::size_t n);
};

// Roofline: max(flops / (flops_per_sec * efficiency), bytes / mem_bw).
double op_cost(double flops, double bytes_moved, const DeviceSpec& dev);

// base_latency + 2 (n-1)/n * bytes / link_bw; 0 for n = 1.
double allreduce_cost(double bytes, const Topology& topo);

// base_latency + (n-1)/n * bytes / link_bw, bytes being the gathered size; 0 for n = 1.
double allgather_cost(double bytes, const Topology& topo);

}  // namespace kraken::perfsim
