#include "dataforge/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "dataforge/error.hpp"

namespace dataforge {

using json = nlohmann::json;

std::uint64_t Tensor::element_count() const {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

namespace {

json metadata_to_json(const CheckpointMetadata& m) {
  json j = {{"run_id", m.run_id}};
  j["seed"] = m.seed ? json(*m.seed) : json(nullptr);
  j["step"] = m.step ? json(*m.step) : json(nullptr);
  if (!m.constituents.empty()) j["constituents"] = m.constituents;
  return j;
}

CheckpointMetadata metadata_from_json(const json& j) {
  CheckpointMetadata m;
  m.run_id = j.value("run_id", "");
  if (j.contains("seed") && !j["seed"].is_null()) m.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("step") && !j["step"].is_null()) m.step = j["step"].get<std::uint64_t>();
  if (j.contains("constituents")) m.constituents = j["constituents"].get<std::vector<std::string>>();
  return m;
}

std::string shape_str(const std::vector<std::uint64_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json tensors = json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    if (t.data.size() != t.element_count()) {
      throw ValidationError("tensor '" + name + "' has " + std::to_string(t.data.size()) + " values for shape " +
                            shape_str(t.shape));
    }
    const std::uint64_t nbytes = t.data.size() * 4;
    tensors[name] = {{"dtype", "f32"}, {"shape", t.shape}, {"offset", offset}, {"nbytes", nbytes}};
    offset += nbytes;
  }
  const json header = {{"format_version", 1}, {"tensors", std::move(tensors)}, {"metadata", metadata_to_json(ckpt.metadata)}};
  const std::string h = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const auto hl = static_cast<std::uint64_t>(h.size());
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((hl >> (8 * i)) & 0xff));
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    std::vector<char> buf(t.data.size() * 4);
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, &t.data[i], 4);
      for (int b = 0; b < 4; ++b) buf[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path, bool allow_nonfinite) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  unsigned char lenbuf[8];
  in.read(reinterpret_cast<char*>(lenbuf), 8);
  if (in.gcount() != 8) throw ValidationError(path.string() + ": truncated header length");
  std::uint64_t hl = 0;
  for (int i = 0; i < 8; ++i) hl |= static_cast<std::uint64_t>(lenbuf[i]) << (8 * i);
  const auto file_size = std::filesystem::file_size(path);
  if (hl > file_size - 8) throw ValidationError(path.string() + ": header length exceeds file size");
  std::string h(hl, '\0');
  in.read(h.data(), static_cast<std::streamsize>(hl));

  Checkpoint ckpt;
  const std::uint64_t payload_start = 8 + hl;
  try {
    const json header = json::parse(h);
    if (header.at("format_version").get<int>() != 1) throw ValidationError(path.string() + ": unsupported format_version");
    ckpt.metadata = metadata_from_json(header.value("metadata", json::object()));
    for (const auto& [name, info] : header.at("tensors").items()) {
      if (info.at("dtype").get<std::string>() != "f32") {
        throw ValidationError(path.string() + ": tensor '" + name + "' has unsupported dtype");
      }
      Tensor t;
      t.shape = info.at("shape").get<std::vector<std::uint64_t>>();
      const auto offset = info.at("offset").get<std::uint64_t>();
      const auto nbytes = info.at("nbytes").get<std::uint64_t>();
      if (nbytes != t.element_count() * 4) {
        throw ValidationError(path.string() + ": tensor '" + name + "' nbytes does not match shape " + shape_str(t.shape));
      }
      if (payload_start + offset + nbytes > file_size) {
        throw ValidationError(path.string() + ": tensor '" + name + "' extends past end of file");
      }
      std::vector<unsigned char> buf(nbytes);
      in.seekg(static_cast<std::streamoff>(payload_start + offset));
      in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(nbytes));
      t.data.resize(nbytes / 4);
      for (std::size_t i = 0; i < t.data.size(); ++i) {
        const std::uint32_t bits = static_cast<std::uint32_t>(buf[4 * i]) | (static_cast<std::uint32_t>(buf[4 * i + 1]) << 8) |
                                   (static_cast<std::uint32_t>(buf[4 * i + 2]) << 16) |
                                   (static_cast<std::uint32_t>(buf[4 * i + 3]) << 24);
        std::memcpy(&t.data[i], &bits, 4);
        if (!allow_nonfinite && !std::isfinite(t.data[i])) {
          throw ValidationError(path.string() + ": tensor '" + name + "' has a non-finite value at index " +
                                std::to_string(i));
        }
      }
      ckpt.tensors.emplace(name, std::move(t));
    }
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": malformed header: " + e.what());
  }
  return ckpt;
}

std::vector<std::string> structural_diff(const Checkpoint& a, const Checkpoint& b) {
  std::vector<std::string> out;
  for (const auto& [name, t] : a.tensors) {
    auto it = b.tensors.find(name);
    if (it == b.tensors.end()) {
      out.push_back("tensor '" + name + "' missing from second checkpoint");
    } else if (it->second.shape != t.shape) {
      out.push_back("tensor '" + name + "' shape " + shape_str(t.shape) + " vs " + shape_str(it->second.shape));
    }
  }
  for (const auto& [name, t] : b.tensors) {
    if (!a.tensors.contains(name)) out.push_back("tensor '" + name + "' missing from first checkpoint");
  }
  return out;
}

std::vector<ValueDiff> value_diff(const Checkpoint& a, const Checkpoint& b) {
  std::vector<ValueDiff> out;
  for (const auto& [name, t] : a.tensors) {
    auto it = b.tensors.find(name);
    if (it == b.tensors.end() || it->second.shape != t.shape) continue;
    ValueDiff d{name, 0.0, 0};
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      const double diff = std::abs(static_cast<double>(t.data[i]) - static_cast<double>(it->second.data[i]));
      if (diff > d.max_abs || std::isnan(diff)) {
        d.max_abs = diff;
        d.index = i;
      }
    }
    out.push_back(d);
  }
  return out;
}

}  // namespace dataforge
