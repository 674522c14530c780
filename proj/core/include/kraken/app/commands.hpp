#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "kraken/io/run_config.hpp"

namespace kraken::app {

struct GlobalOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "out";
};

// --seed if given, else the first experiment seed, else 0.
std::uint64_t resolve_seed(const GlobalOptions& global, const io::RunConfig& config);
// Loads --config when given; otherwise an empty RunConfig.
io::RunConfig load_config(const GlobalOptions& global);

struct DeriveOptions {
  double params = 0.0;  // total bias-free target
  std::size_t parallelism = 1;
  std::size_t layers = 1;
  std::size_t vocab = 50257;
  std::size_t multiple = 0;  // 0 = no rounding
  std::optional<std::size_t> heads;
  bool check_presets = false;  // compare the engine table's handpicked dims
};

struct TrainOptions {
  std::optional<std::string> task;
  std::optional<std::size_t> steps;
};

struct VerifyOptions {
  std::optional<std::filesystem::path> checkpoint;
};

// Each command returns a process exit code and prints a human summary to
// `out`; machine-readable results go under global.out.
int cmd_derive(const GlobalOptions& global, const DeriveOptions& options, std::ostream& out);
int cmd_verify(const GlobalOptions& global, const VerifyOptions& options, std::ostream& out);
int cmd_simulate(const GlobalOptions& global, std::ostream& out);
int cmd_memory(const GlobalOptions& global, std::ostream& out);
int cmd_train_toy(const GlobalOptions& global, const TrainOptions& options, std::ostream& out);

// The desk-scale default: Kraken, L=2, d=32, N=2, 4 heads, V=64, context 64.
ModelConfig tiny_config();

}  // namespace kraken::app
