#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "kraken/model/weights.hpp"

namespace kraken::io {

inline constexpr char kCheckpointMagic[4] = {'K', 'R', 'K', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (all integers little-endian):
//   "KRKN" | u32 version | u64 n | config JSON (n bytes)
//   u32 count | count x {u32 name_len, name, u32 rank, u64 dims[rank], u64 offset}
//   u64 payload_bytes | u64 FNV-1a of payload | payload (f64 little-endian)
std::string encode_checkpoint(const ModelWeights& weights);
ModelWeights decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelWeights& weights);
ModelWeights load_checkpoint(const std::filesystem::path& path);

}  // namespace kraken::io
