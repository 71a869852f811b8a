#include "dataforge/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <vector>

#include "dataforge/error.hpp"
#include "dataforge/hash.hpp"

namespace dataforge {

namespace fs = std::filesystem;

std::uint64_t path_digest(const fs::path& p) {
  std::error_code ec;
  if (fs::is_regular_file(p, ec)) return file_digest(p);
  if (!fs::is_directory(p, ec)) throw IoError("no such file or directory: " + p.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(p)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), p));
  }
  std::sort(files.begin(), files.end());
  Fnv1a64 h;
  for (const auto& f : files) {
    h.update(f.generic_string());
    h.update_byte(0);
    h.update_u64le(file_digest(p / f));
  }
  return h.digest();
}

void RunManifest::set_config(nlohmann::json cfg) {
  config = std::move(cfg);
  config_digest = fnv1a64(config.dump());  // object keys are sorted, so this is canonical
}

void RunManifest::add_input(const fs::path& p) { inputs[p.string()] = to_hex(path_digest(p)); }
void RunManifest::add_output(const fs::path& p) { outputs[p.string()] = to_hex(path_digest(p)); }

nlohmann::json RunManifest::to_json() const {
  return {{"command", command},         {"config", config},   {"config_digest", to_hex(config_digest)},
          {"inputs", inputs},           {"outputs", outputs}, {"seed", seed},
          {"tool_version", tool_version}, {"wall_time_s", wall_time_s}};
}

void RunManifest::write(const fs::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

fs::path manifest_path_for(const fs::path& output) {
  auto p = output;
  if (!p.has_filename()) p = p.parent_path();
  return p.parent_path() / (p.filename().string() + ".manifest.json");
}

}  // namespace dataforge
