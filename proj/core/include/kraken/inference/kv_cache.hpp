#pragma once

#include <cstddef>
#include <vector>

#include "kraken/numerics/tensor.hpp"

namespace kraken {

// Key/value history of one attention block. keys and values are
// length x width with all heads side by side; rows are only ever appended.
struct AttentionCache {
  Tensor keys;
  Tensor values;
  std::size_t width = 0;
  std::size_t capacity = 0;

  std::size_t length() const noexcept { return keys.empty() ? 0 : keys.rows(); }
};

// One AttentionCache per (layer, sub-layer). Standard and parallel-block
// models use a single column.
struct KVCache {
  std::vector<std::vector<AttentionCache>> entries;
  std::size_t capacity = 0;

  std::size_t cur_len() const noexcept {
    return entries.empty() || entries.front().empty() ? 0 : entries.front().front().length();
  }

  static KVCache create(std::size_t layers, std::size_t columns, std::size_t width,
                        std::size_t capacity) {
    KVCache cache;
    cache.capacity = capacity;
    cache.entries.assign(layers, std::vector<AttentionCache>(columns));
    for (auto& row : cache.entries)
      for (auto& e : row) {
        e.width = width;
        e.capacity = capacity;
      }
    return cache;
  }
};

}  // namespace kraken
