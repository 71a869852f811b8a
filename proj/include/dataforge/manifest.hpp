#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <string>

namespace dataforge {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Content digest of a file, or of a directory (relative paths and file
/// digests, in sorted order).
std::uint64_t path_digest(const std::filesystem::path& p);

struct RunManifest {
  std::string command;
  std::uint64_t config_digest = 0;  // digest of the canonical config JSON
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, std::string> inputs;   // path -> hex digest
  std::map<std::string, std::string> outputs;  // path -> hex digest
  std::uint64_t seed = 0;
  std::string tool_version{kToolVersion};
  double wall_time_s = 0.0;

  void set_config(nlohmann::json cfg);
  void add_input(const std::filesystem::path& p);
  void add_output(const std::filesystem::path& p);

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

/// Where the manifest for an output lives: "<out>.manifest.json" next to it.
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

}  // namespace dataforge
