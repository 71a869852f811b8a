#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dataforge/corpus_store.hpp"

namespace dataforge {

enum class SegmentRole { pretrain, context, question, answer, pad };

std::string_view to_string(SegmentRole role);
SegmentRole parse_segment_role(std::string_view s);

// One contiguous run of tokens inside a packed sequence. `group` is the
// attention block the run belongs to: tokens attend only within their group.
// Pretraining documents get one group each; the context/question/answer runs of
// one instruction sample share a group.
struct SegmentRef {
  DocId doc_id;
  std::uint64_t doc_start = 0;
  std::uint64_t seq_start = 0;
  std::uint64_t length = 0;
  bool loss = false;
  SegmentRole role = SegmentRole::pretrain;
  std::uint32_t group = 0;

  bool operator==(const SegmentRef&) const = default;
};

struct PackedSequence {
  std::uint64_t length = 0;  // L
  std::vector<TokenId> tokens;
  std::vector<SegmentRef> segments;

  /// Cumulative end offsets of the attention blocks (cu_seqlens without the
  /// leading zero). A trailing pad run is its own block.
  std::vector<std::uint64_t> boundaries() const;
  /// Σ over non-pad groups of group length, or of its square.
  std::uint64_t sum_doc_lengths() const;
  std::uint64_t sum_doc_lengths_sq() const;

  bool operator==(const PackedSequence&) const = default;
};

/// Read access to tokenized documents. CorpusStore is the production backing;
/// tests substitute an in-memory map.
class TokenSource {
 public:
  virtual ~TokenSource() = default;
  virtual std::uint64_t length(DocId id) const = 0;
  virtual std::vector<TokenId> read(DocId id, std::uint64_t start, std::uint64_t length) const = 0;
};

class StoreTokenSource final : public TokenSource {
 public:
  explicit StoreTokenSource(const CorpusStore& store) : store_(store) {}
  std::uint64_t length(DocId id) const override { return store_.entry(id).token_length; }
  std::vector<TokenId> read(DocId id, std::uint64_t start, std::uint64_t len) const override {
    return store_.read_tokens(id, start, len);
  }

 private:
  const CorpusStore& store_;
};

class MemoryTokenSource final : public TokenSource {
 public:
  void add(DocId id, std::vector<TokenId> tokens) { docs_[id.value] = std::move(tokens); }
  std::uint64_t length(DocId id) const override;
  std::vector<TokenId> read(DocId id, std::uint64_t start, std::uint64_t len) const override;

 private:
  std::unordered_map<std::uint64_t, std::vector<TokenId>> docs_;
};

// ---- short-context concat-and-truncate -------------------------------------

struct ShortPackOptions {
  std::uint64_t seed = 0;
  bool shuffle = true;               // false keeps the caller's order
  std::size_t max_sequences = 0;     // 0 = unlimited
};

struct ShortPackStats {
  std::uint64_t tokens_consumed = 0;
  std::uint64_t tokens_emitted = 0;
  std::uint64_t tokens_discarded = 0;  // truncated remainders plus the dropped tail
  std::uint64_t tail_dropped = 0;      // tokens of the final under-length sequence
  std::size_t docs_consumed = 0;
};

struct ShortPackResult {
  std::vector<PackedSequence> sequences;
  ShortPackStats stats;
};

/// Concatenates whole documents until the sequence reaches L, truncating the
/// last document at L and discarding its remainder.
ShortPackResult pack_short(const TokenSource& docs, std::span<const DocId> doc_ids, std::uint64_t L,
                           const ShortPackOptions& opts = {});

// ---- long-context filter / window ------------------------------------------

struct LongPackOptions {
  std::uint64_t seed = 0;
  std::uint64_t superlong_factor = 4;
  std::uint64_t max_segments = 4;
  std::size_t max_sequences = 0;  // 0 = unlimited
};

struct LongPackStats {
  std::size_t filtered_docs = 0;  // shorter than L
  std::size_t docs_used = 0;
  std::size_t superlong_docs = 0;
};

struct LongPackResult {
  std::vector<PackedSequence> sequences;
  LongPackStats stats;
};

/// Window offsets a document of `doc_length` contributes at length L. Empty
/// when the document is shorter than L. Offsets are ascending and windows
/// never overlap. Keyed by (seed, doc_id) only.
std::vector<std::uint64_t> long_window_offsets(DocId id, std::uint64_t doc_length, std::uint64_t L,
                                               const LongPackOptions& opts);

LongPackResult make_long_sequences(const TokenSource& docs, std::span<const DocId> doc_ids, std::uint64_t L,
                                   const LongPackOptions& opts = {});

// ---- nesting of k sub-sequences into one -----------------------------------

/// Concatenates k single-segment sequences of equal length L/k. Every input
/// must come from a different document.
PackedSequence pack_grouped(std::span<const PackedSequence> subsequences, std::uint64_t L);

// ---- SFT pack-and-pad ------------------------------------------------------

struct SampleSpan {
  SegmentRole role = SegmentRole::context;
  std::vector<TokenId> tokens;
  DocId doc_id;
  std::uint64_t doc_start = 0;
};

struct InstructionSample {
  std::string id;
  std::vector<SampleSpan> spans;

  std::uint64_t token_length() const;
};

struct SftPackOptions {
  bool answer_only_loss = true;
};

/// Greedy first-fit in stream order; every emitted sequence is padded with
/// kPadToken to exactly L.
std::vector<PackedSequence> pack_sft(std::span<const InstructionSample> samples, std::uint64_t L,
                                     const SftPackOptions& opts = {});

// ---- masks -----------------------------------------------------------------

inline constexpr std::uint64_t kDenseMaskCeiling = 1024;

struct DenseMask {
  std::uint64_t size = 0;
  std::vector<std::uint8_t> allowed;  // row-major size x size

  bool at(std::uint64_t i, std::uint64_t j) const { return allowed[i * size + j] != 0; }
};

/// Dense document-masked causal mask, for tests and small L only.
DenseMask boundaries_to_mask(const PackedSequence& seq, std::uint64_t ceiling = kDenseMaskCeiling);

/// Structural and content check of one sequence; throws ValidationError.
/// Token content is compared for store-backed roles (pretrain, context).
void check_sequence(const PackedSequence& seq, const TokenSource* docs = nullptr);

}  // namespace dataforge
