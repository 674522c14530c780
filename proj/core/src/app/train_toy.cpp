#include "kraken/app/train_toy.hpp"

#include <cmath>
#include <random>

#include "kraken/model/forward.hpp"
#include "kraken/numerics/errors.hpp"

namespace kraken::app {
namespace {

Var batch_loss(Tape& tape, const ModelVars& vars, const ModelConfig& config,
               const std::vector<ToyExample>& batch) {
  std::vector<Var> losses;
  losses.reserve(batch.size());
  for (const auto& ex : batch)
    losses.push_back(tape.cross_entropy(forward_logits(tape, vars, config, ex.tokens), ex.targets));
  return tape.scale(tape.add_n(losses), 1.0 / static_cast<double>(batch.size()));
}

std::vector<ToyExample> draw_batch(const io::TrainSection& train, std::size_t vocab,
                                   std::size_t count, std::mt19937_64& gen) {
  std::vector<ToyExample> batch;
  for (std::size_t k = 0; k < count; ++k) batch.push_back(make_toy_example(train, vocab, gen));
  return batch;
}

}  // namespace

ToyExample make_toy_example(const io::TrainSection& train, std::size_t vocab,
                            std::mt19937_64& gen) {
  ToyExample ex;
  if (train.task == "copy") {
    const std::size_t s = train.segment;
    if (s == 0) throw ConfigError("train.segment must be positive");
    std::uniform_int_distribution<int> pick(0, static_cast<int>(vocab) - 1);
    std::vector<int> seq(s);
    for (auto& t : seq) t = pick(gen);
    seq.insert(seq.end(), seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(s));
    ex.tokens.assign(seq.begin(), seq.end() - 1);
    ex.targets.assign(ex.tokens.size(), -1);
    for (std::size_t t = s - 1; t < ex.tokens.size(); ++t) ex.targets[t] = seq[t + 1];
  } else if (train.task == "mod_add") {
    const std::size_t m = train.segment;
    if (m < 2 || m > vocab) throw ConfigError("train.segment (modulus) must lie in [2, vocab]");
    std::uniform_int_distribution<int> pick(0, static_cast<int>(m) - 1);
    const int a = pick(gen), b = pick(gen);
    ex.tokens = {a, b};
    ex.targets = {-1, (a + b) % static_cast<int>(m)};
  } else {
    throw ConfigError("unknown toy task \"" + train.task + "\"");
  }
  return ex;
}

double evaluate_loss(const ModelWeights& weights, const std::vector<ToyExample>& batch) {
  Tape tape(Tape::Mode::Inference);
  const ModelVars vars = bind_model(tape, weights);
  return tape.value(batch_loss(tape, vars, weights.config, batch))[0];
}

TrainResult train_toy(const ModelConfig& config, const io::TrainSection& train,
                      std::uint64_t seed) {
  config.validate_for_numerics();
  if (train.batch == 0 || train.eval_batch == 0) throw ConfigError("train batch sizes must be positive");
  const Rng rng(seed);
  TrainResult result{{}, 0.0, 0.0, init_weights(config, rng)};
  auto data_gen = rng.stream("train.data");
  auto eval_gen = rng.stream("train.eval");
  const auto eval_batch = draw_batch(train, config.vocab, train.eval_batch, eval_gen);

  result.initial_eval = evaluate_loss(result.weights, eval_batch);
  result.step_loss.reserve(train.steps);
  for (std::size_t step = 0; step < train.steps; ++step) {
    const auto batch = draw_batch(train, config.vocab, train.batch, data_gen);
    Tape tape;
    const ModelVars vars = bind_model(tape, result.weights);
    const Var loss = batch_loss(tape, vars, config, batch);
    const double value = tape.value(loss)[0];
    if (!std::isfinite(value))
      throw NumericError("training diverged at step " + std::to_string(step));
    result.step_loss.push_back(value);
    const GradientMap grads = tape.backward(loss, Tensor({1, 1}, 1.0));
    for_each_parameter(result.weights, [&](const std::string& name, Tensor& t) {
      const auto it = grads.find(name);
      if (it == grads.end()) return;
      auto p = t.data();
      const auto g = it->second.data();
      for (std::size_t k = 0; k < p.size(); ++k) p[k] -= train.learning_rate * g[k];
    });
  }
  result.final_eval = evaluate_loss(result.weights, eval_batch);
  if (!std::isfinite(result.final_eval)) throw NumericError("training diverged: final loss is not finite");
  return result;
}

}  // namespace kraken::app
