#include "recurnet/manifest.hpp"

#include <json.hpp>

#include "recurnet/binary_io.hpp"
#include "recurnet/errors.hpp"

namespace recurnet {

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool_version"] = tool_version;
  j["command_line"] = command_line;
  j["config"] = config;
  j["seeds"] = seeds;
  j["dataset_hashes"] = dataset_hashes;
  j["checkpoint_hash"] = checkpoint_hash;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RunManifest m;
    j.at("tool_version").get_to(m.tool_version);
    j.at("command_line").get_to(m.command_line);
    j.at("config").get_to(m.config);
    j.at("seeds").get_to(m.seeds);
    j.at("dataset_hashes").get_to(m.dataset_hashes);
    j.at("checkpoint_hash").get_to(m.checkpoint_hash);
    j.at("outputs").get_to(m.outputs);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed run manifest: ") + e.what());
  }
}

std::string file_hash(const std::filesystem::path& path) { return hex64(fnv1a64(read_file_bytes(path))); }

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  const std::string s = m.to_json();
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

RunManifest read_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return RunManifest::from_json(std::string(bytes.begin(), bytes.end()));
}

}  // namespace recurnet
