#include <cmath>

#include <gtest/gtest.h>

#include "kraken/model/config.hpp"
#include "kraken/model/presets.hpp"
#include "kraken/numerics/errors.hpp"

namespace kraken {
namespace {

ModelConfig kraken_config(std::size_t d, std::size_t n, std::size_t l, std::size_t v) {
  ModelConfig c;
  c.arch = Arch::Kraken;
  c.d_model = d;
  c.parallelism = n;
  c.layers = l;
  c.vocab = v;
  c.heads = 1;
  return c;
}

TEST(CountParams, TablePerLayerExamples) {
  ModelConfig s;
  s.arch = Arch::Standard;
  s.d_model = 2048;
  s.heads = 16;
  EXPECT_EQ(count_params(s, ParamScope::PerLayer), 50'331'648u);
  EXPECT_EQ(count_params(kraken_config(2496, 4, 1, 1), ParamScope::PerLayer), 199'360'512u);
  EXPECT_EQ(count_params(kraken_config(960, 8, 1, 1), ParamScope::PerLayer), 58'982'400u);
}

TEST(CountParams, FormulaBaseCase) {
  EXPECT_EQ(count_params(kraken_config(1, 1, 1, 0)), 8u);
}

TEST(CountParams, TotalsAddEmbeddingTable) {
  const ModelConfig c = kraken_config(64, 2, 4, 1000);
  EXPECT_EQ(count_params(c), 1000u * 64 + 8u * 4 * 2 * 64 * 64);
  ModelConfig s = c;
  s.arch = Arch::Standard;
  s.parallelism = 1;
  EXPECT_EQ(count_params(s), 1000u * 64 + 12u * 4 * 64 * 64);
}

TEST(CountParams, FullCountIncludesBiasesNormsAndCombine) {
  ModelConfig c = kraken_config(8, 2, 1, 10);
  c.context = 4;
  c.heads = 2;
  // per sub-layer biases: 3d + d + 2d + d, LN: 4d; positional ctx*d; final LN 2d;
  // w_concat (dN)d + d.
  const std::uint64_t d = 8;
  const std::uint64_t expected = count_params(c) + 2 * (7 * d + 4 * d) + 4 * d + 2 * d + 2 * d * d + d;
  EXPECT_EQ(count_params_full(c), expected);
}

TEST(CountParams, EveryEnginePresetWithinHalfPercent) {
  for (const auto& p : engine_presets()) {
    const double standard = static_cast<double>(count_params(engine_config(p, Arch::Standard, 1), ParamScope::PerLayer));
    EXPECT_LE(std::abs(standard - p.reported_params_per_layer) / p.reported_params_per_layer, 0.005) << p.name;
    for (std::size_t n : {4, 8}) {
      const double k = static_cast<double>(count_params(engine_config(p, Arch::Kraken, n), ParamScope::PerLayer));
      const double want = p.kraken(n).reported_params_per_layer;
      EXPECT_LE(std::abs(k - want) / want, 0.005) << p.name << " n=" << n;
    }
  }
}

TEST(DeriveDim, ExactInverseRoundTrip) {
  const double p = static_cast<double>(count_params(kraken_config(64, 2, 4, 1000)));
  EXPECT_EQ(derive_kraken_dim(p, 2, 4, 1000), 64.0);
}

TEST(DeriveDim, SixPointSevenBillionFourWay) {
  const double p = 6'652'166'144.0;
  const double root = derive_kraken_dim(p, 4, 32, 51200);
  const double quadratic = (-51200.0 + std::sqrt(51200.0 * 51200.0 + 4.0 * 1024.0 * p)) / 2048.0;
  EXPECT_NEAR(root, quadratic, 1e-9);
  EXPECT_NEAR(root, 2523.9, 0.05);
  // Plug-back oracle.
  EXPECT_NEAR(8.0 * 32 * 4 * root * root + 51200.0 * root, p, 1e-3 * 1.0);
  EXPECT_EQ(derive_kraken_dim(p, 4, 32, 51200, DimRounding::multiple_of(64)), 2496.0);
}

TEST(DeriveDim, GptTwoSmallTwoWay) {
  const double root = derive_kraken_dim(124e6, 2, 12, 50257);
  EXPECT_NEAR(root, 683.3, 0.1);
  EXPECT_NEAR(8.0 * 12 * 2 * root * root + 50257.0 * root, 124e6, 1e-3);
  const double rounded = derive_kraken_dim(124e6, 2, 12, 50257, DimRounding::multiple_of(8));
  EXPECT_LE(std::abs(rounded - 678.0), 8.0);
}

TEST(DeriveDim, TieGoesToSmallerDimension) {
  // With V = 0 and L*N*8 = 8: P = 8 d^2. Choose P halfway between d=2 and d=4 counts.
  const double p = (8.0 * 4 + 8.0 * 16) / 2.0;
  EXPECT_EQ(derive_kraken_dim(p, 1, 1, 0, DimRounding::multiple_of(2)), 2.0);
}

TEST(DeriveDim, Errors) {
  EXPECT_THROW(derive_kraken_dim(0.0, 1, 1, 10), ConfigError);
  EXPECT_THROW(derive_kraken_dim(100.0, 0, 1, 10), ConfigError);
  EXPECT_THROW(derive_kraken_dim(10.0, 1, 1, 1000, DimRounding::multiple_of(64)), ConfigError);
}

TEST(Config, Validation) {
  ModelConfig c;
  c.arch = Arch::Standard;
  c.parallelism = 2;
  EXPECT_THROW(c.validate(), ConfigError);
  c.parallelism = 1;
  EXPECT_NO_THROW(c.validate());
  c.d_model = 10;
  c.heads = 4;
  EXPECT_NO_THROW(c.validate());
  EXPECT_THROW(c.validate_for_numerics(), ConfigError);
  EXPECT_THROW(c.head_dim(), ConfigError);
}

TEST(Config, FfnMultiplierFollowsArchitecture) {
  ModelConfig c;
  c.arch = Arch::Kraken;
  EXPECT_EQ(c.ffn_mult(), 2u);
  c.arch = Arch::ParallelBlock;
  EXPECT_EQ(c.ffn_mult(), 4u);
}

TEST(Config, ArchNamesRoundTrip) {
  for (Arch a : {Arch::Standard, Arch::ParallelBlock, Arch::Kraken}) EXPECT_EQ(parse_arch(to_string(a)), a);
  EXPECT_THROW(parse_arch("moe"), ConfigError);
}

TEST(Presets, ThirteenBillionHeadDimensionIsNotIntegral) {
  const ModelConfig c = engine_config(engine_preset("13B"), Arch::Standard, 1);
  EXPECT_EQ(c.d_model, 5140u);
  EXPECT_NO_THROW(c.validate());
  EXPECT_THROW(c.head_dim(), ConfigError);
}

TEST(Presets, LatencyTableHasTwentyPoints) {
  EXPECT_EQ(latency_references().size(), 20u);
  const auto r = find_latency_reference("6.7B", 2048, 4);
  ASSERT_TRUE(r.has_value());
  EXPECT_DOUBLE_EQ(r->standard_ms, 48.2);
  EXPECT_DOUBLE_EQ(r->parallel_block_ms, 42.1);
  EXPECT_DOUBLE_EQ(r->kraken_ms, 38.0);
  EXPECT_FALSE(find_latency_reference("6.7B", 512, 4).has_value());
}

}  // namespace
}  // namespace kraken
