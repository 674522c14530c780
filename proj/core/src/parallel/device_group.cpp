#include "kraken/parallel/device_group.hpp"

#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "kraken/numerics/errors.hpp"
#include "kraken/numerics/ops.hpp"

namespace kraken::parallel {

std::string_view to_string(CollectiveKind kind) {
  return kind == CollectiveKind::AllReduce ? "allreduce" : "allgather";
}

DeviceGroup::DeviceGroup(std::size_t devices, bool concurrent)
    : devices_(devices), concurrent_(concurrent) {
  if (devices == 0) throw ConfigError("device group needs at least one device");
}

void DeviceGroup::check_participants(std::span<const Tensor> per_device, const char* op) const {
  if (per_device.size() != devices_) {
    throw DimensionError(std::string(op) + ": expected " + std::to_string(devices_) +
                         " participants, got " + std::to_string(per_device.size()));
  }
  for (std::size_t k = 1; k < per_device.size(); ++k) {
    if (per_device[k].shape() != per_device[0].shape()) {
      throw DimensionError(std::string(op) + ": device " + std::to_string(k) + " holds " +
                           kraken::to_string(per_device[k].shape()) + " but device 0 holds " +
                           kraken::to_string(per_device[0].shape()));
    }
  }
}

std::vector<Tensor> DeviceGroup::all_reduce(std::span<const Tensor> per_device,
                                            std::size_t layer) {
  check_participants(per_device, "all_reduce");
  Tensor sum = ops::sum_ordered(per_device);
  log_.push_back({log_.size(), CollectiveKind::AllReduce, layer, sum.size() * sizeof(double)});
  return std::vector<Tensor>(devices_, sum);
}

std::vector<Tensor> DeviceGroup::all_gather(std::span<const Tensor> per_device,
                                            std::size_t layer) {
  check_participants(per_device, "all_gather");
  Tensor gathered = devices_ == 1 ? per_device.front() : ops::concat_cols(per_device);
  log_.push_back(
      {log_.size(), CollectiveKind::AllGather, layer, gathered.size() * sizeof(double)});
  return std::vector<Tensor>(devices_, gathered);
}

std::size_t DeviceGroup::count(CollectiveKind kind) const {
  std::size_t n = 0;
  for (const auto& r : log_) n += r.kind == kind ? 1 : 0;
  return n;
}

std::string DeviceGroup::export_log() const {
  std::ostringstream out;
  for (const auto& r : log_) {
    nlohmann::json j{{"step", r.step},
                     {"kind", std::string(to_string(r.kind))},
                     {"layer", r.layer},
                     {"bytes", r.bytes}};
    out << j.dump() << '\n';
  }
  return out.str();
}

void DeviceGroup::for_each_device(const std::function<void(std::size_t)>& fn) const {
  if (!concurrent_ || devices_ == 1) {
    for (std::size_t k = 0; k < devices_; ++k) fn(k);
    return;
  }
  std::vector<std::exception_ptr> errors(devices_);
  {
    std::vector<std::jthread> workers;
    workers.reserve(devices_);
    for (std::size_t k = 0; k < devices_; ++k) {
      workers.emplace_back([&, k] {
        try {
          fn(k);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace kraken::parallel
