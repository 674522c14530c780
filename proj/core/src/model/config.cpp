#include "kraken/model/config.hpp"

#include <cmath>
#include <sstream>

#include "kraken/numerics/errors.hpp"

namespace kraken {

std::string_view to_string(Arch arch) {
  switch (arch) {
    case Arch::Standard: return "standard";
    case Arch::ParallelBlock: return "parallel_block";
    case Arch::Kraken: return "kraken";
  }
  return "unknown";
}

Arch parse_arch(std::string_view name) {
  if (name == "standard") return Arch::Standard;
  if (name == "parallel_block") return Arch::ParallelBlock;
  if (name == "kraken") return Arch::Kraken;
  throw ConfigError("unknown architecture '" + std::string(name) +
                    "' (expected standard, parallel_block or kraken)");
}

std::size_t ModelConfig::head_dim() const {
  if (heads == 0 || d_model % heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  return d_model / heads;
}

void ModelConfig::validate() const {
  if (layers == 0) throw ConfigError("layers must be >= 1");
  if (d_model == 0) throw ConfigError("d_model must be >= 1");
  if (heads == 0) throw ConfigError("heads must be >= 1");
  if (parallelism == 0) throw ConfigError("parallelism must be >= 1");
  if (arch != Arch::Kraken && parallelism != 1) {
    throw ConfigError(std::string(to_string(arch)) + " models have parallelism 1, got " +
                      std::to_string(parallelism));
  }
  if (vocab == 0) throw ConfigError("vocab must be >= 1");
  if (context == 0) throw ConfigError("context must be >= 1");
}

void ModelConfig::validate_for_numerics() const {
  validate();
  (void)head_dim();
}

std::string describe(const ModelConfig& c) {
  std::ostringstream out;
  out << to_string(c.arch) << " L=" << c.layers << " d=" << c.d_model << " N=" << c.parallelism
      << " heads=" << c.heads << " V=" << c.vocab << " ctx=" << c.context;
  return out.str();
}

std::uint64_t count_params(const ModelConfig& c, ParamScope scope) {
  const std::uint64_t d = c.d_model;
  const std::uint64_t per_sublayer = 4 * d * d + 2 * d * (c.ffn_mult() * d);
  const std::uint64_t per_layer = c.parallelism * per_sublayer;
  if (scope == ParamScope::PerLayer) return per_layer;
  return c.vocab * d + c.layers * per_layer;
}

std::uint64_t count_params_full(const ModelConfig& c) {
  const std::uint64_t d = c.d_model;
  const std::uint64_t hidden = c.ffn_mult() * d;
  const std::uint64_t sublayer = (d * 3 * d + 3 * d) + (d * d + d) + (d * hidden + hidden) +
                                 (hidden * d + d) + 4 * d;
  std::uint64_t total = c.vocab * d + c.context * d + c.layers * c.parallelism * sublayer + 2 * d;
  if (c.arch == Arch::Kraken) total += d * c.parallelism * d + d;
  return total;
}

namespace {

double kraken_poly(double d, double n, double l, double v) { return 8.0 * l * n * d * d + v * d; }

}  // namespace

double derive_kraken_dim(double target, std::size_t parallelism, std::size_t layers,
                         std::size_t vocab, DimRounding rounding) {
  if (!(target > 0.0)) throw ConfigError("target parameter count must be positive");
  if (parallelism == 0 || layers == 0) throw ConfigError("parallelism and layers must be >= 1");
  const double a = 8.0 * static_cast<double>(layers) * static_cast<double>(parallelism);
  const double b = static_cast<double>(vocab);
  const double disc = b * b + 4.0 * a * target;
  // Stable form of (-b + sqrt(disc)) / 2a for b >> 4aP.
  double root = 2.0 * target / (b + std::sqrt(disc));
  const auto n = static_cast<double>(parallelism), l = static_cast<double>(layers);
  // Snap to an integer root when it satisfies the polynomial exactly.
  if (const double r = std::round(root); r > 0.0 && kraken_poly(r, n, l, b) == target) root = r;
  if (rounding.multiple == 0) return root;

  const double q = static_cast<double>(rounding.multiple);
  const double lo = std::floor(root / q) * q;
  const double hi = lo + q;
  const double err_lo = std::abs(kraken_poly(lo, n, l, b) - target);
  const double err_hi = std::abs(kraken_poly(hi, n, l, b) - target);
  const double chosen = err_lo <= err_hi ? lo : hi;
  if (chosen <= 0.0) {
    throw ConfigError("rounding d to a multiple of " + std::to_string(rounding.multiple) +
                      " yields 0");
  }
  return chosen;
}

}  // namespace kraken
