#pragma once

#include <span>

#include "kraken/model/forward.hpp"
#include "kraken/parallel/device_group.hpp"

namespace kraken::parallel {

struct DistributedOptions {
  ActivationTrace* trace = nullptr;  // filled as records[layer][device]
  OutputOverride override_output;
  // Logits computed by every device; all replicas are identical.
  std::vector<Tensor>* replica_logits = nullptr;
};

// Device k runs sub-layer column k on its own tape. Layer boundaries
// exchange outputs with one AllReduce (none before the first layer); the
// final combine gathers all streams with an AllGather and applies w_concat
// locally on every device.
Tensor run_kraken_distributed(std::span<const int> tokens, const ModelWeights& weights,
                              DeviceGroup& group, const DistributedOptions& options = {});

}  // namespace kraken::parallel
