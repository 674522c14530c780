#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "kraken/model/config.hpp"
#include "kraken/perfsim/cost.hpp"

namespace kraken::perfsim {

enum class OpKind {
  QKV_GEMM,
  ATTN,
  WO_GEMM,
  FFN1_GEMM,
  FFN2_GEMM,
  LN,
  ALLREDUCE,
  ALLGATHER,
  CONCAT_GEMM,
  EMBED,
  UNEMBED,
};

enum class Stream { Compute, Collective };

std::string_view to_string(OpKind kind);
std::string_view to_string(Stream stream);
bool is_collective(OpKind kind);

inline constexpr std::size_t kNoLayer = static_cast<std::size_t>(-1);

// Ids index the device's op list. Collective ops with the same id on
// different devices are one collective and run simultaneously.
struct SimOp {
  std::size_t id = 0;
  OpKind kind = OpKind::LN;
  double flops = 0.0;
  double bytes_moved = 0.0;
  double comm_bytes = 0.0;
  std::vector<std::size_t> depends_on;
  Stream stream = Stream::Compute;
  std::size_t layer = kNoLayer;
};

struct Schedule {
  Arch arch = Arch::Standard;
  bool overlap = false;
  std::vector<std::vector<SimOp>> devices;

  std::size_t count(OpKind kind) const;  // on device 0
};

struct ScheduleOptions {
  bool overlap = true;
  std::size_t dtype_size = 2;
  // Extra hidden-state copies charged to each Kraken QKV/WO op.
  double memcopy_copies = 2.0;
};

// Per-device prefill schedule for `context_len` tokens. Standard and
// parallel-block are sharded over topo.n devices; Kraken requires
// config.parallelism == topo.n.
Schedule build_schedule(const ModelConfig& config, const Topology& topo, std::size_t context_len,
                        const ScheduleOptions& options = {});

// Throws ConfigError on dangling or forward references within a device, or on
// collectives that do not line up across devices.
void check_schedule(const Schedule& schedule);

}  // namespace kraken::perfsim
