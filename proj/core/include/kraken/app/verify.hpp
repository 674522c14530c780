#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kraken/model/weights.hpp"
#include "kraken/parallel/equivalence.hpp"

namespace kraken::app {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool passed() const;
  // One "PASS|FAIL name measured=... tolerance=... detail" line per check.
  std::string to_text() const;
};

// Sharded forward over n devices against the monolithic forward.
parallel::EquivalenceReport megatron_equivalence(const ModelWeights& weights, std::size_t n,
                                                 std::span<const int> tokens);

struct IndependenceResult {
  double cross_device_max_delta = 0.0;  // must be exactly 0
  double own_device_min_delta = 0.0;    // > 0 shows the perturbation reached the stream
  std::size_t combinations = 0;
};

// Perturbs the output of sub-layer (i, j) and compares every sub-layer's
// attention output at layer i + 1 against an unperturbed run.
IndependenceResult sublayer_independence(const ModelWeights& weights, std::span<const int> tokens);

struct GradientCheck {
  std::string parameter;
  double rel_error = 0.0;  // |g - g_fd| / max(|g|, |g_fd|) over the whole tensor
};

// Central finite differences for every parameter of one Kraken sub-layer
// with randomised weights, inputs x, y and loss sum(out * R).
std::vector<GradientCheck> gradient_check_sublayer(const ModelConfig& config, std::uint64_t seed,
                                                   std::size_t seq_len, double h = 1e-5);

// Largest relative error between cached decode logits and full recompute,
// over every prefill/decode split of `tokens`.
double prefix_consistency_error(const ModelWeights& weights, std::span<const int> tokens);

std::vector<int> random_tokens(std::size_t count, std::size_t vocab, std::uint64_t seed);

// Runs every check on a desk-scale config. With `kraken_weights`, those are
// used for the Kraken checks instead of a fresh initialisation.
VerifyReport run_verify(const ModelConfig& config, std::uint64_t seed,
                        const ModelWeights* kraken_weights = nullptr);

}  // namespace kraken::app
