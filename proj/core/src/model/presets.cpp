#include "kraken/model/presets.hpp"

#include <array>

#include "kraken/numerics/errors.hpp"

namespace kraken {
namespace {

constexpr std::array<EnginePreset, 5> kPresets{{
    {"1.3B", 24, 2048, 16, 50.3e6, {4, 1248, 12, 49.9e6}, {8, 960, 10, 59.0e6}},
    {"6.7B", 32, 4096, 32, 201.3e6, {4, 2496, 24, 199.4e6}, {8, 1920, 20, 235.9e6}},
    {"13B", 40, 5140, 40, 317.0e6, {4, 3120, 30, 311.5e6}, {8, 2304, 32, 339.7e6}},
    {"65B", 80, 8192, 64, 805.3e6, {4, 4992, 39, 797.4e6}, {8, 3648, 38, 851.7e6}},
    {"175B", 96, 12288, 96, 1.81e9, {4, 7424, 58, 1.76e9}, {8, 5472, 57, 1.92e9}},
}};

constexpr std::array<LatencyReference, 20> kLatency{{
    {"1.3B", 128, 4, 3.7, 3.3, 3.3, 1.0},
    {"1.3B", 2048, 4, 17.0, 13.6, 13.2, 1.0},
    {"6.7B", 128, 4, 8.3, 7.0, 5.8, 1.0},
    {"6.7B", 2048, 4, 48.2, 42.1, 38.0, 1.0},
    {"13B", 128, 4, 13.0, 11.1, 10.7, 1.0},
    {"13B", 2048, 4, 83.7, 73.8, 66.9, 1.0},
    {"65B", 128, 4, 12.7, 11.2, 8.5, 0.25},
    {"65B", 2048, 4, 84.6, 79.5, 63.8, 0.25},
    {"175B", 128, 4, 24.6, 22.5, 19.9, 0.25},
    {"175B", 2048, 4, 243.7, 230.8, 158.9, 0.25},
    {"1.3B", 128, 8, 4.3, 3.4, 3.2, 1.0},
    {"1.3B", 2048, 8, 15.9, 11.7, 9.7, 1.0},
    {"6.7B", 128, 8, 7.1, 5.7, 4.7, 1.0},
    {"6.7B", 2048, 8, 37.3, 29.2, 27.6, 1.0},
    {"13B", 128, 8, 10.7, 8.4, 6.7, 1.0},
    {"13B", 2048, 8, 58.8, 46.9, 42.6, 1.0},
    {"65B", 128, 8, 8.7, 7.2, 6.2, 0.25},
    {"65B", 2048, 8, 55.9, 48.9, 42.9, 0.25},
    {"175B", 128, 8, 16.9, 14.4, 12.4, 0.25},
    {"175B", 2048, 8, 125.1, 114.7, 98.0, 0.25},
}};

}  // namespace

const KrakenVariant& EnginePreset::kraken(std::size_t parallelism) const {
  if (parallelism == 4) return four_way;
  if (parallelism == 8) return eight_way;
  throw ConfigError("engine presets exist for 4-way and 8-way parallelism only, got " +
                    std::to_string(parallelism));
}

std::span<const EnginePreset> engine_presets() { return kPresets; }

const EnginePreset& engine_preset(std::string_view name) {
  for (const auto& p : kPresets)
    if (p.name == name) return p;
  throw ConfigError("unknown engine preset '" + std::string(name) + "'");
}

ModelConfig engine_config(const EnginePreset& preset, Arch arch, std::size_t parallelism) {
  ModelConfig c;
  c.arch = arch;
  c.layers = preset.layers;
  c.vocab = kEngineVocab;
  c.context = kEngineContext;
  if (arch == Arch::Kraken) {
    const auto& k = preset.kraken(parallelism);
    c.d_model = k.d_model;
    c.heads = k.heads;
    c.parallelism = parallelism;
  } else {
    c.d_model = preset.d_model;
    c.heads = preset.heads;
    c.parallelism = 1;
  }
  return c;
}

std::span<const LatencyReference> latency_references() { return kLatency; }

std::optional<LatencyReference> find_latency_reference(std::string_view size, std::size_t context,
                                                       std::size_t parallelism) {
  for (const auto& r : kLatency)
    if (r.size == size && r.context == context && r.parallelism == parallelism) return r;
  return std::nullopt;
}

}  // namespace kraken
