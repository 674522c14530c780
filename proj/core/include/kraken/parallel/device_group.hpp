#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kraken/numerics/tensor.hpp"

namespace kraken::parallel {

enum class CollectiveKind { AllReduce, AllGather };

std::string_view to_string(CollectiveKind kind);

struct CollectiveRecord {
  std::size_t step = 0;
  CollectiveKind kind = CollectiveKind::AllReduce;
  std::size_t layer = 0;
  std::size_t bytes = 0;

  bool operator==(const CollectiveRecord&) const = default;
};

// N simulated devices exchanging tensors only through logged collectives.
// Each collective is recorded once for the whole group.
class DeviceGroup {
 public:
  explicit DeviceGroup(std::size_t devices, bool concurrent = false);

  std::size_t size() const noexcept { return devices_; }
  bool concurrent() const noexcept { return concurrent_; }

  // Every device receives the element-wise sum, accumulated in ascending
  // device order. Logged with bytes = elements * 8.
  std::vector<Tensor> all_reduce(std::span<const Tensor> per_device, std::size_t layer);

  // Every device receives the column-wise concatenation in device order.
  // Logged with bytes = gathered elements * 8.
  std::vector<Tensor> all_gather(std::span<const Tensor> per_device, std::size_t layer);

  const std::vector<CollectiveRecord>& log() const noexcept { return log_; }
  std::size_t count(CollectiveKind kind) const;
  void clear_log() { log_.clear(); }

  // One JSON object per line: {"step","kind","layer","bytes"}.
  std::string export_log() const;

  // Runs fn(device) for every device; on separate threads when concurrent.
  void for_each_device(const std::function<void(std::size_t)>& fn) const;

 private:
  void check_participants(std::span<const Tensor> per_device, const char* op) const;

  std::size_t devices_;
  bool concurrent_;
  std::vector<CollectiveRecord> log_;
};

}  // namespace kraken::parallel
