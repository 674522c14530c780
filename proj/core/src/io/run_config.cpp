#include "kraken/io/run_config.hpp"

#include <initializer_list>

#include <nlohmann/json.hpp>

#include "kraken/io/csv.hpp"
#include "kraken/numerics/errors.hpp"

namespace kraken::io {
namespace {

using Json = nlohmann::ordered_json;

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

void check_object(const Json& j, const std::string& path,
                  std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError((path.empty() ? "<root>" : path) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError(join(path, key) + ": unknown key");
  }
}

std::size_t as_size(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
    throw ConfigError(path + ": expected a non-negative integer");
  return j.get<std::size_t>();
}

std::uint64_t as_u64(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
    throw ConfigError(path + ": expected a non-negative integer");
  return j.get<std::uint64_t>();
}

double as_double(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + ": expected a string");
  return j.get<std::string>();
}

template <typename F>
auto as_list(const Json& j, const std::string& path, F&& element) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array");
  std::vector<decltype(element(j, path))> out;
  for (std::size_t k = 0; k < j.size(); ++k)
    out.push_back(element(j[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

const Json& require(const Json& j, const std::string& path, std::string_view key) {
  const auto it = j.find(std::string(key));
  if (it == j.end()) throw ConfigError(join(path, key) + ": missing key");
  return *it;
}

template <typename T, typename F>
void optional_field(const Json& j, const std::string& path, std::string_view key,
                    std::optional<T>& out, F&& convert) {
  if (const auto it = j.find(std::string(key)); it != j.end()) out = convert(*it, join(path, key));
}

template <typename T, typename F>
void default_field(const Json& j, const std::string& path, std::string_view key, T& out,
                   F&& convert) {
  if (const auto it = j.find(std::string(key)); it != j.end()) out = convert(*it, join(path, key));
}

ModelConfig model_from_json(const Json& j, const std::string& path) {
  check_object(j, path, {"arch", "layers", "d_model", "parallelism", "heads", "vocab", "context"});
  ModelConfig c;
  const std::string arch = as_string(require(j, path, "arch"), join(path, "arch"));
  try {
    c.arch = parse_arch(arch);
  } catch (const ConfigError& e) {
    throw ConfigError(join(path, "arch") + ": " + e.what());
  }
  c.layers = as_size(require(j, path, "layers"), join(path, "layers"));
  c.d_model = as_size(require(j, path, "d_model"), join(path, "d_model"));
  c.parallelism = as_size(require(j, path, "parallelism"), join(path, "parallelism"));
  c.heads = as_size(require(j, path, "heads"), join(path, "heads"));
  c.vocab = as_size(require(j, path, "vocab"), join(path, "vocab"));
  c.context = as_size(require(j, path, "context"), join(path, "context"));
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError((path.empty() ? std::string("model") : path) + ": " + e.what());
  }
  return c;
}

Json model_to_json(const ModelConfig& c) {
  Json j;
  j["arch"] = std::string(to_string(c.arch));
  j["layers"] = c.layers;
  j["d_model"] = c.d_model;
  j["parallelism"] = c.parallelism;
  j["heads"] = c.heads;
  j["vocab"] = c.vocab;
  j["context"] = c.context;
  return j;
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text) {
  const Json root = parse_json(json_text);
  check_object(root, "", {"model", "topology", "device", "experiment", "train"});
  RunConfig rc;
  if (const auto it = root.find("model"); it != root.end()) rc.model = model_from_json(*it, "model");

  if (const auto it = root.find("topology"); it != root.end()) {
    const std::string p = "topology";
    check_object(*it, p, {"n", "link_bw", "base_latency"});
    optional_field(*it, p, "n", rc.topology.n, as_size);
    optional_field(*it, p, "link_bw", rc.topology.link_bw, as_double);
    optional_field(*it, p, "base_latency", rc.topology.base_latency, as_double);
  }
  if (const auto it = root.find("device"); it != root.end()) {
    const std::string p = "device";
    check_object(*it, p, {"flops_per_sec", "mem_bw", "efficiency", "memcopy_copies"});
    optional_field(*it, p, "flops_per_sec", rc.device.flops_per_sec, as_double);
    optional_field(*it, p, "mem_bw", rc.device.mem_bw, as_double);
    optional_field(*it, p, "efficiency", rc.device.efficiency, as_double);
    optional_field(*it, p, "memcopy_copies", rc.device.memcopy_copies, as_double);
  }
  if (const auto it = root.find("experiment"); it != root.end()) {
    const std::string p = "experiment";
    auto& e = rc.experiment;
    check_object(*it, p,
                 {"sizes", "contexts", "parallelism", "seeds", "output_dir", "memory_batch",
                  "memory_seqlens", "dtype_size"});
    auto strings = [](const Json& j, const std::string& path) { return as_list(j, path, as_string); };
    auto sizes = [](const Json& j, const std::string& path) { return as_list(j, path, as_size); };
    auto u64s = [](const Json& j, const std::string& path) { return as_list(j, path, as_u64); };
    default_field(*it, p, "sizes", e.sizes, strings);
    default_field(*it, p, "contexts", e.contexts, sizes);
    default_field(*it, p, "parallelism", e.parallelism, sizes);
    default_field(*it, p, "seeds", e.seeds, u64s);
    default_field(*it, p, "output_dir", e.output_dir, as_string);
    default_field(*it, p, "memory_batch", e.memory_batch, as_size);
    default_field(*it, p, "memory_seqlens", e.memory_seqlens, sizes);
    default_field(*it, p, "dtype_size", e.dtype_size, as_size);
  }
  if (const auto it = root.find("train"); it != root.end()) {
    const std::string p = "train";
    auto& t = rc.train;
    check_object(*it, p, {"task", "steps", "learning_rate", "batch", "segment", "eval_batch"});
    default_field(*it, p, "task", t.task, as_string);
    default_field(*it, p, "steps", t.steps, as_size);
    default_field(*it, p, "learning_rate", t.learning_rate, as_double);
    default_field(*it, p, "batch", t.batch, as_size);
    default_field(*it, p, "segment", t.segment, as_size);
    default_field(*it, p, "eval_batch", t.eval_batch, as_size);
    if (t.task != "copy" && t.task != "mod_add")
      throw ConfigError("train.task: expected \"copy\" or \"mod_add\", got \"" + t.task + "\"");
  }
  return rc;
}

std::string serialize_run_config(const RunConfig& rc) {
  Json root = Json::object();
  if (rc.model) root["model"] = model_to_json(*rc.model);

  Json topo = Json::object();
  if (rc.topology.n) topo["n"] = *rc.topology.n;
  if (rc.topology.link_bw) topo["link_bw"] = *rc.topology.link_bw;
  if (rc.topology.base_latency) topo["base_latency"] = *rc.topology.base_latency;
  root["topology"] = topo;

  Json dev = Json::object();
  if (rc.device.flops_per_sec) dev["flops_per_sec"] = *rc.device.flops_per_sec;
  if (rc.device.mem_bw) dev["mem_bw"] = *rc.device.mem_bw;
  if (rc.device.efficiency) dev["efficiency"] = *rc.device.efficiency;
  if (rc.device.memcopy_copies) dev["memcopy_copies"] = *rc.device.memcopy_copies;
  root["device"] = dev;

  const auto& e = rc.experiment;
  root["experiment"] = {{"sizes", e.sizes},
                        {"contexts", e.contexts},
                        {"parallelism", e.parallelism},
                        {"seeds", e.seeds},
                        {"output_dir", e.output_dir},
                        {"memory_batch", e.memory_batch},
                        {"memory_seqlens", e.memory_seqlens},
                        {"dtype_size", e.dtype_size}};
  const auto& t = rc.train;
  root["train"] = {{"task", t.task},           {"steps", t.steps},
                   {"learning_rate", t.learning_rate}, {"batch", t.batch},
                   {"segment", t.segment},     {"eval_batch", t.eval_batch}};
  return root.dump(2) + "\n";
}

RunConfig load_run_config(const std::filesystem::path& path) {
  try {
    return parse_run_config(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_run_config(const std::filesystem::path& path, const RunConfig& config) {
  write_file_atomic(path, serialize_run_config(config));
}

std::string model_config_json(const ModelConfig& config) { return model_to_json(config).dump(); }

ModelConfig parse_model_config(std::string_view json_text) {
  return model_from_json(parse_json(json_text), "");
}

perfsim::Calibration require_calibration(const RunConfig& rc) {
  auto need = [](const std::optional<double>& v, const char* key) {
    if (!v) throw ConfigError(std::string("missing calibration constant ") + key);
    return *v;
  };
  perfsim::Calibration c;
  c.link_bw = need(rc.topology.link_bw, "topology.link_bw");
  c.base_latency = need(rc.topology.base_latency, "topology.base_latency");
  c.device.flops_per_sec = need(rc.device.flops_per_sec, "device.flops_per_sec");
  c.device.mem_bw = need(rc.device.mem_bw, "device.mem_bw");
  c.device.efficiency = need(rc.device.efficiency, "device.efficiency");
  c.memcopy_copies = need(rc.device.memcopy_copies, "device.memcopy_copies");
  c.device.validate();
  return c;
}

RunConfig with_default_calibration(RunConfig rc) {
  const auto d = perfsim::default_calibration();
  if (!rc.topology.link_bw) rc.topology.link_bw = d.link_bw;
  if (!rc.topology.base_latency) rc.topology.base_latency = d.base_latency;
  if (!rc.device.flops_per_sec) rc.device.flops_per_sec = d.device.flops_per_sec;
  if (!rc.device.mem_bw) rc.device.mem_bw = d.device.mem_bw;
  if (!rc.device.efficiency) rc.device.efficiency = d.device.efficiency;
  if (!rc.device.memcopy_copies) rc.device.memcopy_copies = d.memcopy_copies;
  return rc;
}

}  // namespace kraken::io
