#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "dataforge/corpus_store.hpp"
#include "dataforge/longqa.hpp"
#include "dataforge/mathgen/rational.hpp"
#include "dataforge/packed_dataset.hpp"
#include "dataforge/teacher.hpp"

namespace dataforge {

using mathgen::Rational;

enum class Bucket { short_ctx, long64k, long256k, sft_short, sft_long };

std::string_view to_string(Bucket b);
Bucket parse_bucket(std::string_view s);
/// short_ctx and sft_short count as short data; the rest as long.
bool is_short(Bucket b);

struct MixtureEntry {
  std::string source;
  Bucket bucket = Bucket::short_ctx;
  Rational fraction;
  longqa::SampleKind sample_kind = longqa::SampleKind::single_doc;  // sft_long only
};

struct MixtureSpec {
  std::string name;
  std::vector<MixtureEntry> entries;
  std::uint64_t token_budget = 1;
  std::uint64_t seed = 0;
  std::uint64_t seq_len = 65536;       // packed length L of the stage
  std::uint64_t long64k_len = 65536;
  std::uint64_t long256k_len = 262144;
  bool nest_long64k = true;            // pack 64K windows k-at-a-time into seq_len sequences
  std::uint64_t step_tokens = 0;       // tokens per optimizer step (0 = whole dataset)

  /// Throws ValidationError: empty spec, negative fraction, fractions not
  /// summing to exactly 1 (with the deficit), zero budget.
  void validate() const;

  static MixtureSpec from_json(const nlohmann::json& j);
  static MixtureSpec load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

/// Built-in recipes: instella-long-stage1, instella-long-stage2, instella-long-sft.
MixtureSpec builtin_spec(std::string_view name);
std::vector<std::string> builtin_spec_names();
bool is_builtin_spec(std::string_view name);

/// Per-entry token targets: round(fraction * budget) with largest-remainder
/// correction (ties go to the earlier entry) so the targets sum to the budget.
std::vector<std::uint64_t> plan_mixture(const MixtureSpec& spec);

struct StageSplit {
  std::vector<DocId> stage1;
  std::vector<DocId> stage2;
};

/// Hash split keyed by (seed, doc_id); input order is preserved in each set.
StageSplit split_stages(std::span<const DocId> doc_ids, const Rational& stage2_fraction, std::uint64_t seed);

struct EntryRealization {
  std::string source;
  Bucket bucket = Bucket::short_ctx;
  Rational fraction;
  std::uint64_t seq_len = 0;
  std::uint64_t target_tokens = 0;
  std::uint64_t realized_tokens = 0;
  std::size_t sequence_count = 0;
  std::vector<DocId> doc_ids;  // in order of first use
  nlohmann::json stats = nlohmann::json::object();
};

struct MixturePlan {
  std::string name;
  std::uint64_t token_budget = 0;
  std::vector<EntryRealization> entries;
  std::uint64_t short_tokens = 0;
  std::uint64_t long_tokens = 0;

  std::uint64_t realized_tokens() const { return short_tokens + long_tokens; }
  /// realized_tokens / token_budget for entry i.
  double realized_fraction(std::size_t i) const;
  double short_ratio() const;
  nlohmann::json to_json() const;
};

struct RealizeOptions {
  const std::unordered_set<std::uint64_t>* allowed_docs = nullptr;  // restrict to these ids (stage split)
  Teacher* teacher = nullptr;                                       // sft_long; stub when null
  std::uint64_t superlong_factor = 4;
  std::uint64_t max_segments = 4;
  std::size_t max_in_flight = 4;
  bool answer_only_loss = true;
};

struct RealizeOutput {
  MixturePlan plan;
  std::vector<longqa::LongQASample> longqa_samples;
};

/// Packs every entry with its bucket's regime and appends the sequences to
/// `writer` in entry order. Entry i receives a whole number of sequences
/// chosen so that the running token error inside its short/long class stays
/// within half a sequence. Throws ValidationError listing the shortfall when a
/// source runs out.
RealizeOutput realize_mixture(const MixtureSpec& spec, const CorpusStore& store, const RealizeOptions& opts,
                              PackedDatasetWriter& writer);

/// Writes plan.json and provenance.jsonl (one line per entry with its doc ids).
void write_plan(const std::filesystem::path& dir, const MixturePlan& plan);

}  // namespace dataforge
