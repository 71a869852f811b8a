#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "dataforge/packer.hpp"

namespace dataforge {

// Packed dataset directory:
//   sequences.bin         u32 LE tokens, sequences back to back
//   sequences.idx.jsonl   one record per sequence (L, byte offset, segments, boundaries)
//   stats.json            producer counters

struct SequenceTags {
  std::string source;
  std::string entry;
};

struct SequenceRecord {
  std::size_t index = 0;
  std::uint64_t length = 0;
  std::uint64_t byte_offset = 0;
  std::vector<SegmentRef> segments;
  std::vector<std::uint64_t> boundaries;
  SequenceTags tags;

  /// Metadata-only view of the sequence (no tokens) for cost computations.
  PackedSequence skeleton() const;
};

nlohmann::json segment_to_json(const SegmentRef& s);
SegmentRef segment_from_json(const nlohmann::json& j);

class PackedDatasetWriter {
 public:
  explicit PackedDatasetWriter(const std::filesystem::path& dir);
  void append(const PackedSequence& seq, const SequenceTags& tags = {});
  void finish(const nlohmann::json& stats);
  std::size_t count() const { return count_; }

 private:
  std::filesystem::path dir_;
  std::ofstream bin_;
  std::ofstream idx_;
  std::uint64_t offset_ = 0;
  std::size_t count_ = 0;
};

class PackedDataset {
 public:
  /// Parses the index; malformed lines raise ValidationError naming the line.
  static PackedDataset open(const std::filesystem::path& dir);

  const std::vector<SequenceRecord>& records() const { return records_; }
  const nlohmann::json& stats() const { return stats_; }
  PackedSequence read(std::size_t index) const;

  /// Full check: index structure, blob size, per-sequence invariants, and
  /// (when `docs` is given) token content against the source documents.
  void validate(const TokenSource* docs = nullptr) const;

 private:
  std::filesystem::path dir_;
  std::vector<SequenceRecord> records_;
  nlohmann::json stats_;
};

}  // namespace dataforge
