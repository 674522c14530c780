#include "kraken/numerics/rng.hpp"

#include "kraken/numerics/errors.hpp"

namespace kraken {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

// splitmix64 finalizer; decorrelates nearby seeds.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::mt19937_64 Rng::stream(std::string_view label) const {
  return std::mt19937_64(mix(seed_ ^ fnv1a64(label)));
}

Tensor seeded_init(const Shape& shape, InitScheme scheme, const Rng& rng, std::string_view label) {
  switch (scheme.kind) {
    case InitScheme::Kind::Zeros:
      return Tensor(shape, 0.0);
    case InitScheme::Kind::Ones:
      return Tensor(shape, 1.0);
    case InitScheme::Kind::Normal:
      break;
  }
  if (!(scheme.stddev >= 0.0)) throw ConfigError("seeded_init: stddev must be >= 0");
  Tensor t(shape);
  if (scheme.stddev == 0.0) return t;
  auto gen = rng.stream(label);
  std::normal_distribution<double> dist(0.0, scheme.stddev);
  for (auto& v : t.data()) v = dist(gen);
  return t;
}

}  // namespace kraken
