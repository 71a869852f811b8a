#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "dataforge/batch_planner.hpp"
#include "dataforge/corpus_store.hpp"
#include "dataforge/mixture.hpp"
#include "dataforge/teacher.hpp"

namespace dataforge {

struct RecipeOptions {
  std::uint64_t seed = 0;
  std::uint64_t budget = 0;                   // 0 keeps the spec's budget
  Rational stage2_fraction = Rational(1, 2);  // share of the store reserved for stage 2
  std::size_t microbatch_size = 1;
  CostKey cost_key = CostKey::sum_len_sq;
  bool nest_long64k = true;
  Teacher* teacher = nullptr;  // stub when null
  std::size_t max_in_flight = 4;
};

struct RecipeResult {
  MixturePlan plan;
  std::size_t sequences = 0;
  std::size_t longqa_samples = 0;
  std::size_t steps = 0;
};

/// Runs a built-in or custom mixture end to end into `out`:
///   dataset/           packed sequences
///   plan.json          targets, realized tokens and fractions, short:long ratio
///   provenance.jsonl   doc ids per entry
///   stages.json        stage split summary (stage recipes)
///   longqa.jsonl       synthesized QA samples (sft recipes)
///   batch_plan.jsonl   one microbatch plan per optimizer step
RecipeResult run_recipe(const MixtureSpec& spec, const CorpusStore& store, const std::filesystem::path& out,
                        const RecipeOptions& opts);

/// Which stage's documents a recipe may use: 1, 2, or 0 for no split (sft).
int recipe_stage(const MixtureSpec& spec);

}  // namespace dataforge
