#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace kraken {

enum class Arch { Standard, ParallelBlock, Kraken };

std::string_view to_string(Arch arch);
Arch parse_arch(std::string_view name);

// Hyperparameters of one model. For Kraken, `heads` counts heads per
// sub-layer and `parallelism` is the fixed number of sub-layers per layer.
struct ModelConfig {
  Arch arch = Arch::Kraken;
  std::size_t layers = 1;
  std::size_t d_model = 8;
  std::size_t parallelism = 1;
  std::size_t heads = 1;
  std::size_t vocab = 16;
  std::size_t context = 16;

  // Hidden expansion of the feed-forward block: 2 for Kraken, 4 otherwise.
  std::size_t ffn_mult() const noexcept { return arch == Arch::Kraken ? 2 : 4; }
  std::size_t ffn_hidden() const noexcept { return ffn_mult() * d_model; }
  // Throws ConfigError when d_model is not a multiple of heads.
  std::size_t head_dim() const;

  // Structural invariants (positive sizes, parallelism only for Kraken).
  void validate() const;
  // validate() plus integral head dimension, required to run numerics.
  void validate_for_numerics() const;

  bool operator==(const ModelConfig&) const = default;
};

std::string describe(const ModelConfig& config);

enum class ParamScope { Total, PerLayer };

// Bias-free weight count: V*d + L*N*(4d^2 + 2*ffn_mult*d^2). Biases, LayerNorm
// parameters and the positional table are excluded.
std::uint64_t count_params(const ModelConfig& config, ParamScope scope = ParamScope::Total);

// Every stored parameter: biases, LayerNorms, positional table and the
// final combine projection included.
std::uint64_t count_params_full(const ModelConfig& config);

struct DimRounding {
  std::size_t multiple = 0;  // 0 = no rounding

  static DimRounding none() { return {}; }
  static DimRounding multiple_of(std::size_t q) { return {q}; }
};

// Positive root d of 8*L*N*d^2 + V*d - P = 0. With rounding, picks whichever of
// the two neighbouring multiples gives a bias-free count closer to P (the
// smaller wins ties).
double derive_kraken_dim(double target_params, std::size_t parallelism, std::size_t layers,
                         std::size_t vocab, DimRounding rounding = DimRounding::none());

}  // namespace kraken
