#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "kraken/app/commands.hpp"

int main(int argc, char** argv) {
  using namespace kraken::app;
  CLI::App app{"Kraken transformer reference tools"};
  app.require_subcommand(1);

  GlobalOptions global;
  std::string config_path, out_dir = "out";
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();

  DeriveOptions derive;
  auto* derive_cmd = app.add_subcommand("derive", "Solve for the Kraken embedding dimension");
  derive_cmd->add_option("--params", derive.params, "Target total parameter count (bias-free)");
  derive_cmd->add_option("--parallelism,-N", derive.parallelism, "Degree of parallelism")->capture_default_str();
  derive_cmd->add_option("--layers,-L", derive.layers, "Number of layers")->capture_default_str();
  derive_cmd->add_option("--vocab,-V", derive.vocab, "Vocabulary size")->capture_default_str();
  derive_cmd->add_option("--multiple", derive.multiple, "Round d to a multiple of this (0 = exact)")
      ->capture_default_str();
  std::size_t heads = 0;
  auto* heads_opt = derive_cmd->add_option("--heads", heads, "Heads per sub-layer in the emitted config");
  derive_cmd->add_flag("--check-presets", derive.check_presets,
                       "Compare per-layer counts of the engine presets against reported values");

  VerifyOptions verify;
  std::string checkpoint;
  auto* verify_cmd = app.add_subcommand("verify", "Run the equivalence and gradient checks");
  auto* ckpt_opt = verify_cmd->add_option("--checkpoint", checkpoint, "Verify weights loaded from a checkpoint");

  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate time to first token over the experiment grid");
  auto* memory_cmd = app.add_subcommand("memory", "Per-layer weight and KV cache memory table");

  TrainOptions train;
  std::string task;
  std::size_t steps = 0;
  auto* train_cmd = app.add_subcommand("train-toy", "Train a tiny model on a synthetic task");
  auto* task_opt = train_cmd->add_option("--task", task, "copy or mod_add")->check(CLI::IsMember({"copy", "mod_add"}));
  auto* steps_opt = train_cmd->add_option("--steps", steps, "Training steps");

  CLI11_PARSE(app, argc, argv);

  if (!config_path.empty()) global.config = config_path;
  if (*seed_opt) global.seed = seed;
  global.out = out_dir;
  if (*heads_opt) derive.heads = heads;
  if (*ckpt_opt) verify.checkpoint = checkpoint;
  if (*task_opt) train.task = task;
  if (*steps_opt) train.steps = steps;

  try {
    if (*derive_cmd) return cmd_derive(global, derive, std::cout);
    if (*verify_cmd) return cmd_verify(global, verify, std::cout);
    if (*simulate_cmd) return cmd_simulate(global, std::cout);
    if (*memory_cmd) return cmd_memory(global, std::cout);
    if (*train_cmd) return cmd_train_toy(global, train, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
