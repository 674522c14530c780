#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "kraken/model/config.hpp"

namespace kraken {

struct KrakenVariant {
  std::size_t parallelism;
  std::size_t d_model;
  std::size_t heads;  // per sub-layer
  double reported_params_per_layer;
};

// One row of the engine configuration table used for latency comparisons.
// The same dimensions are shared by the standard and parallel-block variants.
struct EnginePreset {
  std::string_view name;
  std::size_t layers;
  std::size_t d_model;
  std::size_t heads;
  double reported_params_per_layer;
  KrakenVariant four_way;
  KrakenVariant eight_way;

  const KrakenVariant& kraken(std::size_t parallelism) const;
};

inline constexpr std::size_t kEngineVocab = 51200;
inline constexpr std::size_t kEngineContext = 2048;
inline constexpr std::size_t kTrainingVocab = 50257;

std::span<const EnginePreset> engine_presets();
const EnginePreset& engine_preset(std::string_view name);

ModelConfig engine_config(const EnginePreset& preset, Arch arch, std::size_t parallelism);

// Measured time-to-first-token reference values (milliseconds). The 65B and
// 175B rows were measured with a quarter of the layers.
struct LatencyReference {
  std::string_view size;
  std::size_t context;
  std::size_t parallelism;
  double standard_ms;
  double parallel_block_ms;
  double kraken_ms;
  double layer_fraction;
};

std::span<const LatencyReference> latency_references();
std::optional<LatencyReference> find_latency_reference(std::string_view size, std::size_t context,
                                                       std::size_t parallelism);

}  // namespace kraken
