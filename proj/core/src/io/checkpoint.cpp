#include "kraken/io/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <map>

#include "kraken/io/csv.hpp"
#include "kraken/io/run_config.hpp"
#include "kraken/numerics/errors.hpp"

namespace kraken::io {
namespace {

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t k = 0; k < sizeof(T); ++k) out.push_back(static_cast<char>((value >> (8 * k)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T value = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k)
      value |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
    pos_ += sizeof(T);
    return value;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n)
      throw FormatError(std::string("checkpoint truncated while reading ") + what);
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ModelWeights& weights) {
  check_shapes(weights);
  std::string header(kCheckpointMagic, 4);
  put<std::uint32_t>(header, kCheckpointVersion);
  const std::string config = model_config_json(weights.config);
  put<std::uint64_t>(header, config.size());
  header += config;

  std::vector<std::pair<std::string, const Tensor*>> tensors;
  for_each_parameter(weights, [&](const std::string& name, const Tensor& t) { tensors.emplace_back(name, &t); });
  put<std::uint32_t>(header, static_cast<std::uint32_t>(tensors.size()));

  std::string payload;
  for (const auto& [name, t] : tensors) {
    put<std::uint32_t>(header, static_cast<std::uint32_t>(name.size()));
    header += name;
    put<std::uint32_t>(header, static_cast<std::uint32_t>(t->rank()));
    for (std::size_t dim : t->shape()) put<std::uint64_t>(header, dim);
    put<std::uint64_t>(header, payload.size());
    for (double v : t->data()) put<std::uint64_t>(payload, std::bit_cast<std::uint64_t>(v));
  }
  put<std::uint64_t>(header, payload.size());
  put<std::uint64_t>(header, fnv1a64(payload));
  return header + payload;
}

ModelWeights decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(4, "magic") != std::string_view(kCheckpointMagic, 4))
    throw FormatError("not a checkpoint: bad magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const auto config_len = r.get<std::uint64_t>("config length");
  ModelConfig config;
  try {
    config = parse_model_config(r.take(config_len, "config"));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }

  struct Entry {
    Shape shape;
    std::uint64_t offset;
  };
  std::map<std::string, Entry> directory;
  const auto count = r.get<std::uint32_t>("tensor count");
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = r.get<std::uint32_t>("name length");
    std::string name(r.take(name_len, "name"));
    const auto rank = r.get<std::uint32_t>("rank");
    if (rank > 8) throw FormatError("tensor " + name + ": implausible rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& dim : shape) dim = r.get<std::uint64_t>("dimension");
    const auto offset = r.get<std::uint64_t>("offset");
    if (!directory.emplace(name, Entry{std::move(shape), offset}).second)
      throw FormatError("duplicate tensor " + name);
  }
  const auto payload_size = r.get<std::uint64_t>("payload size");
  const auto checksum = r.get<std::uint64_t>("checksum");
  if (r.remaining() != payload_size) {
    throw FormatError("payload is " + std::to_string(r.remaining()) + " bytes, header says " +
                      std::to_string(payload_size));
  }
  const std::string_view payload = r.take(payload_size, "payload");
  if (fnv1a64(payload) != checksum) throw FormatError("checkpoint checksum mismatch");

  std::vector<std::pair<std::uint64_t, std::uint64_t>> extents;
  ModelWeights weights = init_weights(config, Rng(0));
  std::size_t matched = 0;
  for_each_parameter(weights, [&](const std::string& name, Tensor& t) {
    const auto it = directory.find(name);
    if (it == directory.end()) throw FormatError("checkpoint is missing tensor " + name);
    if (it->second.shape != t.shape()) {
      throw FormatError("tensor " + name + ": stored shape " + to_string(it->second.shape) +
                        ", config expects " + to_string(t.shape()));
    }
    const std::uint64_t len = t.size() * sizeof(double);
    const std::uint64_t off = it->second.offset;
    if (off > payload.size() || len > payload.size() - off)
      throw FormatError("tensor " + name + ": data out of bounds");
    extents.emplace_back(off, off + len);
    Reader data(payload.substr(off, len));
    for (double& v : t.data()) v = std::bit_cast<double>(data.get<std::uint64_t>("tensor data"));
    ++matched;
  });
  if (matched != directory.size()) throw FormatError("checkpoint holds unexpected tensors");
  std::sort(extents.begin(), extents.end());
  for (std::size_t k = 1; k < extents.size(); ++k)
    if (extents[k].first < extents[k - 1].second) throw FormatError("overlapping tensor data");
  return weights;
}

void save_checkpoint(const std::filesystem::path& path, const ModelWeights& weights) {
  write_file_atomic(path, encode_checkpoint(weights));
}

ModelWeights load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace kraken::io
