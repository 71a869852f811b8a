#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dataforge {

using TokenId = std::uint32_t;

// Byte tokenizer: ids 0..255 are raw UTF-8 bytes, followed by three specials.
inline constexpr TokenId kBosToken = 256;
inline constexpr TokenId kEosToken = 257;
inline constexpr TokenId kPadToken = 258;
inline constexpr std::uint32_t kByteVocabSize = 259;

inline constexpr std::string_view kByteTokenizer = "byte-v1";
inline constexpr std::string_view kPretokenized = "pretokenized";

struct DocId {
  std::uint64_t value = 0;

  std::string hex() const;
  static DocId parse(std::string_view hex);
  auto operator<=>(const DocId&) const = default;
};

enum class StageTag { unassigned, stage1, stage2 };

std::string_view to_string(StageTag tag);
StageTag parse_stage_tag(std::string_view s);

std::vector<TokenId> tokenize(std::string_view text);
/// Inverse of tokenize; throws ValidationError on ids outside the byte range.
std::string detokenize(std::span<const TokenId> tokens);

/// doc_id = FNV-1a64(source || 0x00 || content bytes).
DocId make_doc_id(std::string_view source, std::string_view content_bytes);
DocId make_doc_id(std::string_view source, std::span<const TokenId> tokens);

struct Document {
  DocId id;
  std::string source;
  std::optional<std::string> text;
  std::vector<TokenId> tokens;
  StageTag stage = StageTag::unassigned;
  // Instruction documents: tokens before this offset are the prompt, the rest
  // the response. Absent for plain text.
  std::optional<std::uint64_t> answer_offset;
};

struct StoreIndexEntry {
  DocId id;
  std::uint64_t byte_offset = 0;
  std::uint64_t token_length = 0;
  std::string source;
  StageTag stage = StageTag::unassigned;
  std::optional<std::uint64_t> answer_offset;
};

struct StoreMeta {
  std::string tokenizer_id{kByteTokenizer};
  std::uint32_t vocab_size = kByteVocabSize;
  int format_version = 1;
};

struct IngestResult {
  std::size_t ingested = 0;
  std::size_t duplicates = 0;
  std::size_t empty = 0;
};

// On-disk layout (directory):
//   tokens.bin   u32 little-endian token blob
//   index.jsonl  one StoreIndexEntry per line
//   meta.json    {tokenizer_id, vocab_size, format_version}
//
// Single writer; reads use pread and may run concurrently.
class CorpusStore {
 public:
  /// Opens an existing store, or creates an empty one with `meta`.
  /// Throws ValidationError if an existing store has a different tokenizer.
  static CorpusStore open_or_create(const std::filesystem::path& dir, const StoreMeta& meta = {});
  static CorpusStore open(const std::filesystem::path& dir);

  CorpusStore(CorpusStore&&) noexcept;
  CorpusStore& operator=(CorpusStore&&) noexcept;
  CorpusStore(const CorpusStore&) = delete;
  CorpusStore& operator=(const CorpusStore&) = delete;
  ~CorpusStore();

  /// Each line: {"text": str} | {"tokens": [int]} | {"prompt": str, "response": str}.
  /// All lines are validated before anything is appended.
  IngestResult ingest_jsonl(const std::filesystem::path& path, const std::string& source);

  /// Appends one document; returns false (and writes nothing) for a duplicate id.
  bool append(const std::string& source, std::span<const TokenId> tokens, DocId id,
              std::optional<std::uint64_t> answer_offset = std::nullopt);
  bool append_text(const std::string& source, std::string_view text);
  bool append_instruction(const std::string& source, std::string_view prompt, std::string_view response);

  /// Flushes pending appends to disk. Called automatically before reads.
  void flush();

  Document get_document(DocId id) const;
  std::vector<TokenId> read_tokens(DocId id, std::uint64_t start, std::uint64_t length) const;
  /// Decoded text of a byte-tokenized document.
  std::string read_text(DocId id) const;

  bool contains(DocId id) const;
  const StoreIndexEntry& entry(DocId id) const;
  const std::vector<StoreIndexEntry>& entries() const { return entries_; }
  std::vector<DocId> ids_for_source(std::string_view source) const;
  std::vector<std::string> sources() const;
  std::uint64_t total_tokens() const { return total_tokens_; }
  const StoreMeta& meta() const { return meta_; }
  const std::filesystem::path& dir() const { return dir_; }

  /// Rewrites index.jsonl with new stage tags for the given documents.
  void set_stage_tags(const std::unordered_map<std::uint64_t, StageTag>& tags);

  /// Index/blob consistency scan; throws ValidationError on the first problem.
  void verify() const;

 private:
  CorpusStore() = default;
  void load();
  void ensure_reader() const;
  void write_index_line(std::ostream& out, const StoreIndexEntry& e) const;

  std::filesystem::path dir_;
  StoreMeta meta_;
  std::vector<StoreIndexEntry> entries_;
  std::unordered_map<std::uint64_t, std::size_t> by_id_;
  std::uint64_t total_tokens_ = 0;

  std::ofstream blob_out_;
  std::ofstream index_out_;
  mutable int read_fd_ = -1;
};

}  // namespace dataforge

template <>
struct std::hash<dataforge::DocId> {
  std::size_t operator()(const dataforge::DocId& d) const noexcept { return d.value; }
};
