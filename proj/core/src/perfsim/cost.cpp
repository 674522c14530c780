#include "kraken/perfsim/cost.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "kraken/numerics/errors.hpp"

namespace kraken::perfsim {

void DeviceSpec::validate() const {
  if (!(flops_per_sec > 0.0)) throw ConfigError("device.flops_per_sec must be positive");
  if (!(mem_bw > 0.0)) throw ConfigError("device.mem_bw must be positive");
  if (!(efficiency > 0.0 && efficiency <= 1.0))
    throw ConfigError("device.efficiency must lie in (0, 1]");
}

void Topology::validate() const {
  if (n == 0) throw ConfigError("topology.n must be at least 1");
  if (!(link_bw > 0.0)) throw ConfigError("topology.link_bw must be positive");
  if (!(base_latency >= 0.0)) throw ConfigError("topology.base_latency must be non-negative");
}

Topology Topology::zero_comm(std::size_t n) {
  return {n, std::numeric_limits<double>::infinity(), 0.0};
}

double op_cost(double flops, double bytes_moved, const DeviceSpec& dev) {
  if (flops == 0.0 && bytes_moved == 0.0) return 0.0;
  return std::max(flops / (dev.flops_per_sec * dev.efficiency), bytes_moved / dev.mem_bw);
}

double allreduce_cost(double bytes, const Topology& topo) {
  if (topo.n <= 1) return 0.0;
  const double n = static_cast<double>(topo.n);
  return topo.base_latency + 2.0 * (n - 1.0) / n * bytes / topo.link_bw;
}

double allgather_cost(double bytes, const Topology& topo) {
  if (topo.n <= 1) return 0.0;
  const double n = static_cast<double>(topo.n);
  return topo.base_latency + (n - 1.0) / n * bytes / topo.link_bw;
}

}  // namespace kraken::perfsim
