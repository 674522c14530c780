#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "kraken/io/run_config.hpp"
#include "kraken/model/weights.hpp"

namespace kraken::app {

// One training example: input ids and per-position targets (-1 = no loss).
struct ToyExample {
  std::vector<int> tokens;
  std::vector<int> targets;
};

// copy: s followed by s again, loss on predicting the second copy.
// mod_add: [a, b], loss on predicting (a + b) mod m at the last position.
ToyExample make_toy_example(const io::TrainSection& train, std::size_t vocab,
                            std::mt19937_64& gen);

struct TrainResult {
  std::vector<double> step_loss;  // mean training loss of each step's batch
  double initial_eval = 0.0;      // held-out batch, before the first step
  double final_eval = 0.0;        // same batch, after the last step
  ModelWeights weights;
};

// Mean cross-entropy of `weights` over `batch`.
double evaluate_loss(const ModelWeights& weights, const std::vector<ToyExample>& batch);

// Plain SGD. Throws NumericError when the loss stops being finite.
TrainResult train_toy(const ModelConfig& config, const io::TrainSection& train,
                      std::uint64_t seed);

}  // namespace kraken::app
