#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kraken/model/config.hpp"
#include "kraken/perfsim/comparison.hpp"

namespace kraken::io {

// Calibration values stay optional so a missing key can be reported by name.
struct TopologySection {
  std::optional<std::size_t> n;
  std::optional<double> link_bw;
  std::optional<double> base_latency;

  bool operator==(const TopologySection&) const = default;
};

struct DeviceSection {
  std::optional<double> flops_per_sec;
  std::optional<double> mem_bw;
  std::optional<double> efficiency;
  std::optional<double> memcopy_copies;

  bool operator==(const DeviceSection&) const = default;
};

struct ExperimentSection {
  std::vector<std::string> sizes;
  std::vector<std::size_t> contexts;
  std::vector<std::size_t> parallelism;
  std::vector<std::uint64_t> seeds;
  std::string output_dir;
  std::size_t memory_batch = 32;
  std::vector<std::size_t> memory_seqlens;
  std::size_t dtype_size = 2;

  bool operator==(const ExperimentSection&) const = default;
};

struct TrainSection {
  std::string task = "copy";  // copy | mod_add
  std::size_t steps = 500;
  double learning_rate = 0.1;
  std::size_t batch = 8;
  std::size_t segment = 4;  // copy: tokens repeated; mod_add: modulus
  std::size_t eval_batch = 32;

  bool operator==(const TrainSection&) const = default;
};

struct RunConfig {
  std::optional<ModelConfig> model;
  TopologySection topology;
  DeviceSection device;
  ExperimentSection experiment;
  TrainSection train;

  bool operator==(const RunConfig&) const = default;
};

// Strict parse: unknown keys and type mismatches throw ConfigError naming the
// offending path (e.g. "model.layers").
RunConfig parse_run_config(std::string_view json_text);
std::string serialize_run_config(const RunConfig& config);

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& config);

std::string model_config_json(const ModelConfig& config);
ModelConfig parse_model_config(std::string_view json_text);

// Throws ConfigError naming the first missing key, e.g. "topology.link_bw".
perfsim::Calibration require_calibration(const RunConfig& config);

// Applies perfsim::default_calibration() values to every absent key.
RunConfig with_default_calibration(RunConfig config);

}  // namespace kraken::io
