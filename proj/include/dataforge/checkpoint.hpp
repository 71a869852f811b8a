#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dataforge {

struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<float> data;  // row-major

  std::uint64_t element_count() const;
};

struct CheckpointMetadata {
  std::string run_id;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> step;
  std::vector<std::string> constituents;  // run_ids merged into this checkpoint
};

// File layout:
//   u64 LE   header length H
//   H bytes  JSON {"format_version": 1,
//                  "tensors": {name: {"dtype": "f32", "shape": [...], "offset": o, "nbytes": n}},
//                  "metadata": {...}}
//   payload  raw f32 LE, tensors in name order; offsets are relative to the payload start
struct Checkpoint {
  std::map<std::string, Tensor> tensors;
  CheckpointMetadata metadata;
};

/// Throws IoError on unreadable files and ValidationError on malformed content
/// or (unless allowed) NaN/Inf values, naming the tensor and flat index.
Checkpoint read_checkpoint(const std::filesystem::path& path, bool allow_nonfinite = false);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Human-readable structural differences (missing tensors, shape mismatches).
/// Empty when both name->shape maps agree.
std::vector<std::string> structural_diff(const Checkpoint& a, const Checkpoint& b);

struct ValueDiff {
  std::string name;
  double max_abs = 0.0;
  std::uint64_t index = 0;  // flat index of the largest difference
};

/// Per-tensor max |a - b| for tensors present in both with equal shapes.
std::vector<ValueDiff> value_diff(const Checkpoint& a, const Checkpoint& b);

}  // namespace dataforge
