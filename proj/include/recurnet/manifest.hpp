#ifndef RECURNET_MANIFEST_HPP
#define RECURNET_MANIFEST_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace recurnet {

inline constexpr const char* kToolVersion = "0.1.0";

/// Record of one artifact-producing command, enough to replay it.
struct RunManifest {
  std::vector<std::string> command_line;  // argv without the program name
  std::string config;                     // snapshot of the effective configuration text
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, std::string> dataset_hashes;  // path -> FNV-1a 64 hex
  std::string checkpoint_hash;
  std::vector<std::string> outputs;
  std::string tool_version = kToolVersion;

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);

  bool operator==(const RunManifest&) const = default;
};

/// FNV-1a 64 of a file's bytes as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

void write_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace recurnet

#endif  // RECURNET_MANIFEST_HPP
