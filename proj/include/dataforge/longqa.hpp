#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "dataforge/corpus_store.hpp"
#include "dataforge/packer.hpp"
#include "dataforge/teacher.hpp"

namespace dataforge::longqa {

inline constexpr std::uint64_t kMinDocTokens = 8192;       // 8K
inline constexpr std::uint64_t kMaxContextTokens = 131072;  // 128K
inline constexpr std::uint64_t kSubpartMin = 2048;
inline constexpr std::uint64_t kSubpartMax = 8192;

// Whole sentences [start_sentence, end_sentence) of a document's retained text.
struct SubpartSpan {
  DocId doc_id;
  std::size_t start_sentence = 0;
  std::size_t end_sentence = 0;  // exclusive
  std::uint64_t token_start = 0;
  std::uint64_t token_length = 0;

  nlohmann::json to_json() const;
};

/// Picks a sentence-aligned window of 2K-8K tokens. `sentence_lengths` are
/// token counts per sentence. Throws ValidationError when no window of whole
/// sentences falls inside [min_tokens, max_tokens].
SubpartSpan select_subpart(DocId id, std::span<const std::uint64_t> sentence_lengths, std::uint64_t seed,
                           std::uint64_t min_tokens = kSubpartMin, std::uint64_t max_tokens = kSubpartMax);

enum class SampleKind { single_doc, concat };
std::string_view to_string(SampleKind kind);

struct ContextRef {
  DocId doc_id;
  std::uint64_t start = 0;
  std::uint64_t length = 0;
};

struct LongQASample {
  SampleKind kind = SampleKind::single_doc;
  std::vector<ContextRef> context;  // token ranges in the store, in order
  std::vector<DocId> source_doc_ids;
  DocId qa_doc;                     // document the QA was generated from
  SubpartSpan subpart;
  std::string question;
  std::string answer;

  std::uint64_t context_tokens() const;
  nlohmann::json to_json() const;
  /// Context, question and answer spans ready for pack_sft.
  InstructionSample to_instruction(const TokenSource& docs, const std::string& id) const;
};

struct Options {
  std::uint64_t seed = 0;
  std::size_t max_in_flight = 4;
};

/// Text of the subpart the teacher sees for a document (whole document when
/// it is shorter than the subpart ceiling).
struct Passage {
  SubpartSpan span;
  std::string text;
};
Passage passage_for(const std::string& retained_text, DocId id, std::uint64_t seed);

struct SkipReport {
  DocId doc_id;
  std::string reason;
};

/// One sample per document: context truncated at 128K, subpart chosen from the
/// retained text, one teacher call per document. Documents shorter than 8K are
/// rejected with ValidationError; teacher failures are skipped and reported.
LongQASample build_single_doc_sample(const CorpusStore& store, DocId id, Teacher& teacher, std::uint64_t seed);

struct BuildResult {
  std::vector<LongQASample> samples;
  std::vector<SkipReport> skipped;
};

BuildResult build_single_doc_samples(const CorpusStore& store, std::span<const DocId> ids, Teacher& teacher,
                                     const Options& opts, std::size_t max_samples = 0);

// Short document with its pre-generated QA.
struct ConcatMember {
  DocId doc_id;
  std::uint64_t token_length = 0;
  SubpartSpan subpart;
  TeacherResponse qa;
};

/// Concatenates members in order until the total reaches 128K (the last one
/// is kept whole) and appends the QA of one member chosen by seed. Throws
/// ValidationError when the members run out first or a document repeats.
LongQASample build_concat_sample(std::span<const ConcatMember> members, std::uint64_t seed);

/// Streams `ids` through QA generation and concat assembly. Leftover members
/// that cannot reach 128K are reported as skipped.
BuildResult build_concat_samples(const CorpusStore& store, std::span<const DocId> ids, Teacher& teacher,
                                 const Options& opts, std::size_t max_samples = 0);

void write_jsonl(const std::filesystem::path& path, std::span<const LongQASample> samples);

}  // namespace dataforge::longqa
