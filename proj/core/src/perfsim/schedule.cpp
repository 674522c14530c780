#include "kraken/perfsim/schedule.hpp"

#include <algorithm>
#include <string>

#include "kraken/numerics/errors.hpp"

namespace kraken::perfsim {

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::QKV_GEMM: return "QKV_GEMM";
    case OpKind::ATTN: return "ATTN";
    case OpKind::WO_GEMM: return "WO_GEMM";
    case OpKind::FFN1_GEMM: return "FFN1_GEMM";
    case OpKind::FFN2_GEMM: return "FFN2_GEMM";
    case OpKind::LN: return "LN";
    case OpKind::ALLREDUCE: return "ALLREDUCE";
    case OpKind::ALLGATHER: return "ALLGATHER";
    case OpKind::CONCAT_GEMM: return "CONCAT_GEMM";
    case OpKind::EMBED: return "EMBED";
    case OpKind::UNEMBED: return "UNEMBED";
  }
  return "UNKNOWN";
}

std::string_view to_string(Stream stream) {
  return stream == Stream::Compute ? "compute" : "collective";
}

bool is_collective(OpKind kind) { return kind == OpKind::ALLREDUCE || kind == OpKind::ALLGATHER; }

std::size_t Schedule::count(OpKind kind) const {
  if (devices.empty()) return 0;
  return static_cast<std::size_t>(std::count_if(devices[0].begin(), devices[0].end(),
                                                [&](const SimOp& op) { return op.kind == kind; }));
}

namespace {

class Builder {
 public:
  explicit Builder(double dtype) : dtype_(dtype) {}

  std::size_t add(OpKind kind, double flops, double bytes, std::vector<std::size_t> deps,
                  std::size_t layer, Stream stream = Stream::Compute, double comm = 0.0) {
    SimOp op;
    op.id = ops_.size();
    op.kind = kind;
    op.flops = flops;
    op.bytes_moved = bytes;
    op.comm_bytes = comm;
    op.depends_on = std::move(deps);
    op.stream = stream;
    op.layer = layer;
    ops_.push_back(std::move(op));
    return ops_.back().id;
  }

  // [m x k] * [k x n]: operands and result read/written once.
  std::size_t gemm(OpKind kind, double m, double k, double n, std::vector<std::size_t> deps,
                   std::size_t layer, double extra_bytes = 0.0) {
    return add(kind, 2.0 * m * k * n, (m * k + k * n + m * n) * dtype_ + extra_bytes,
               std::move(deps), layer);
  }

  std::size_t layer_norm(double rows, double width, std::vector<std::size_t> deps,
                         std::size_t layer) {
    return add(OpKind::LN, 5.0 * rows * width, 2.0 * rows * width * dtype_, std::move(deps), layer);
  }

  // Causal attention over l positions with `width` columns of heads.
  std::size_t attention(double l, double width, std::vector<std::size_t> deps, std::size_t layer) {
    return add(OpKind::ATTN, 2.0 * l * l * width, 4.0 * l * width * dtype_, std::move(deps), layer);
  }

  std::vector<SimOp> take() { return std::move(ops_); }

 private:
  double dtype_;
  std::vector<SimOp> ops_;
};

std::vector<SimOp> sharded_layers(const ModelConfig& c, const Topology& topo, double l,
                                  double dtype, Builder& b, std::size_t prev) {
  const double d = static_cast<double>(c.d_model);
  const double n = static_cast<double>(topo.n);
  const double f = static_cast<double>(c.ffn_hidden());
  const double ar_bytes = l * d * dtype;
  for (std::size_t i = 0; i < c.layers; ++i) {
    const std::size_t ln1 = b.layer_norm(l, d, {prev}, i);
    const std::size_t qkv = b.gemm(OpKind::QKV_GEMM, l, d, 3.0 * d / n, {ln1}, i);
    const std::size_t attn = b.attention(l, d / n, {qkv}, i);
    const std::size_t wo = b.gemm(OpKind::WO_GEMM, l, d / n, d, {attn}, i);
    if (c.arch == Arch::Standard) {
      const std::size_t ar1 =
          b.add(OpKind::ALLREDUCE, 0, 0, {wo}, i, Stream::Compute, ar_bytes);
      const std::size_t ln2 = b.layer_norm(l, d, {ar1}, i);
      const std::size_t f1 = b.gemm(OpKind::FFN1_GEMM, l, d, f / n, {ln2}, i);
      const std::size_t f2 = b.gemm(OpKind::FFN2_GEMM, l, f / n, d, {f1}, i);
      prev = b.add(OpKind::ALLREDUCE, 0, 0, {f2}, i, Stream::Compute, ar_bytes);
    } else {
      const std::size_t ln2 = b.layer_norm(l, d, {prev}, i);
      const std::size_t f1 = b.gemm(OpKind::FFN1_GEMM, l, d, f / n, {ln2}, i);
      const std::size_t f2 = b.gemm(OpKind::FFN2_GEMM, l, f / n, d, {f1}, i);
      prev = b.add(OpKind::ALLREDUCE, 0, 0, {wo, f2}, i, Stream::Compute, ar_bytes);
    }
  }
  const std::size_t ln = b.layer_norm(1, d, {prev}, kNoLayer);
  b.gemm(OpKind::UNEMBED, 1, d, static_cast<double>(c.vocab), {ln}, kNoLayer);
  return b.take();
}

std::vector<SimOp> kraken_layers(const ModelConfig& c, double l, double dtype,
                                 const ScheduleOptions& options, Builder& b, std::size_t prev) {
  const double d = static_cast<double>(c.d_model);
  const double f = static_cast<double>(c.ffn_hidden());
  const double n = static_cast<double>(c.parallelism);
  const double copy_bytes = options.memcopy_copies * l * d * dtype;
  const Stream ar_stream = options.overlap ? Stream::Collective : Stream::Compute;
  std::size_t last_ar = 0;
  for (std::size_t i = 0; i < c.layers; ++i) {
    const std::size_t ln1 = b.layer_norm(l, d, {prev}, i);
    const std::size_t qkv = b.gemm(OpKind::QKV_GEMM, l, d, 3.0 * d, {ln1}, i, copy_bytes);
    const std::size_t attn = b.attention(l, d, {qkv}, i);
    const std::size_t wo = b.gemm(OpKind::WO_GEMM, l, d, d, {attn}, i, copy_bytes);
    std::vector<std::size_t> ln2_deps{wo};
    if (i > 0) ln2_deps.push_back(last_ar);
    const std::size_t ln2 = b.layer_norm(l, d, std::move(ln2_deps), i);
    const std::size_t f1 = b.gemm(OpKind::FFN1_GEMM, l, d, f, {ln2}, i);
    prev = b.gemm(OpKind::FFN2_GEMM, l, f, d, {f1}, i);
    if (i + 1 < c.layers) last_ar = b.add(OpKind::ALLREDUCE, 0, 0, {prev}, i, ar_stream, l * d * dtype);
  }
  const std::size_t last = c.layers - 1;
  const std::size_t gather =
      b.add(OpKind::ALLGATHER, 0, 0, {prev}, last, Stream::Compute, n * d * dtype);
  const std::size_t concat = b.gemm(OpKind::CONCAT_GEMM, 1, n * d, d, {gather}, kNoLayer);
  const std::size_t ln = b.layer_norm(1, d, {concat}, kNoLayer);
  b.gemm(OpKind::UNEMBED, 1, d, static_cast<double>(c.vocab), {ln}, kNoLayer);
  return b.take();
}

}  // namespace

Schedule build_schedule(const ModelConfig& config, const Topology& topo, std::size_t context_len,
                        const ScheduleOptions& options) {
  config.validate();
  if (topo.n == 0) throw ConfigError("topology.n must be at least 1");
  if (context_len == 0) throw ConfigError("context length must be positive");
  if (config.arch == Arch::Kraken) {
    if (config.parallelism != topo.n) {
      throw ConfigError("kraken parallelism " + std::to_string(config.parallelism) +
                        " does not match topology.n " + std::to_string(topo.n));
    }
  } else {
    if (config.heads % topo.n != 0) {
      throw ConfigError("cannot shard " + std::to_string(config.heads) + " heads over " +
                        std::to_string(topo.n) + " devices");
    }
    if (config.ffn_hidden() % topo.n != 0) {
      throw ConfigError("cannot shard ffn hidden " + std::to_string(config.ffn_hidden()) +
                        " over " + std::to_string(topo.n) + " devices");
    }
  }

  const double l = static_cast<double>(context_len);
  const double dtype = static_cast<double>(options.dtype_size);
  Builder b(dtype);
  const double d = static_cast<double>(config.d_model);
  const std::size_t embed = b.add(OpKind::EMBED, 0, 2.0 * l * d * dtype, {}, kNoLayer);

  Schedule s;
  s.arch = config.arch;
  s.overlap = config.arch == Arch::Kraken && options.overlap;
  const auto ops = config.arch == Arch::Kraken
                       ? kraken_layers(config, l, dtype, options, b, embed)
                       : sharded_layers(config, topo, l, dtype, b, embed);
  s.devices.assign(topo.n, ops);
  return s;
}

void check_schedule(const Schedule& schedule) {
  if (schedule.devices.empty()) throw ConfigError("schedule has no devices");
  for (std::size_t dev = 0; dev < schedule.devices.size(); ++dev) {
    const auto& ops = schedule.devices[dev];
    for (std::size_t k = 0; k < ops.size(); ++k) {
      if (ops[k].id != k) {
        throw ConfigError("device " + std::to_string(dev) + ": op at position " +
                          std::to_string(k) + " has id " + std::to_string(ops[k].id));
      }
      for (std::size_t dep : ops[k].depends_on) {
        if (dep >= ops.size() || dep == k) {
          throw ConfigError("device " + std::to_string(dev) + ": op " + std::to_string(k) +
                            " has invalid dependency " + std::to_string(dep));
        }
      }
      if (!is_collective(ops[k].kind)) continue;
      for (std::size_t other = 0; other < schedule.devices.size(); ++other) {
        const auto& peer = schedule.devices[other];
        if (k >= peer.size() || peer[k].kind != ops[k].kind || peer[k].stream != ops[k].stream) {
          throw ConfigError("collective " + std::to_string(k) + " is missing on device " +
                            std::to_string(other));
        }
      }
    }
  }
}

}  // namespace kraken::perfsim
