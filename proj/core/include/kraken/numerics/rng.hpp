#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "kraken/numerics/tensor.hpp"

namespace kraken {

// Seeded generator with label-based stream splitting. stream(label) depends
// only on (seed, label), never on how many other streams were drawn before.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::mt19937_64 stream(std::string_view label) const;

 private:
  std::uint64_t seed_;
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

struct InitScheme {
  enum class Kind { Normal, Zeros, Ones };
  Kind kind = Kind::Normal;
  double stddev = 0.02;

  static InitScheme normal(double stddev) { return {Kind::Normal, stddev}; }
  static InitScheme zeros() { return {Kind::Zeros, 0.0}; }
  static InitScheme ones() { return {Kind::Ones, 0.0}; }
};

Tensor seeded_init(const Shape& shape, InitScheme scheme, const Rng& rng,
                   std::string_view label);

}  // namespace kraken
