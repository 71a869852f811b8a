#include "dataforge/recipe.hpp"

#include <fstream>
#include <unordered_set>

#include "dataforge/error.hpp"
#include "dataforge/hash.hpp"
#include "dataforge/longqa.hpp"
#include "dataforge/packed_dataset.hpp"
#include "dataforge/rng.hpp"

namespace dataforge {

namespace fs = std::filesystem;
using json = nlohmann::json;

int recipe_stage(const MixtureSpec& spec) {
  if (spec.name == "instella-long-stage1") return 1;
  if (spec.name == "instella-long-stage2") return 2;
  return 0;
}

namespace {

std::string ids_digest(std::vector<DocId> ids) {
  std::sort(ids.begin(), ids.end());
  Fnv1a64 h;
  for (const auto id : ids) h.update_u64le(id.value);
  return to_hex(h.digest());
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

}  // namespace

RecipeResult run_recipe(const MixtureSpec& spec_in, const CorpusStore& store, const fs::path& out,
                        const RecipeOptions& opts) {
  MixtureSpec spec = spec_in;
  spec.seed = opts.seed;
  if (opts.budget) spec.token_budget = opts.budget;
  spec.nest_long64k = opts.nest_long64k;
  spec.validate();

  fs::create_directories(out);
  const auto dataset_dir = out / "dataset";
  if (fs::exists(dataset_dir)) fs::remove_all(dataset_dir);

  // 1. stage split
  std::unordered_set<std::uint64_t> allowed;
  const int stage = recipe_stage(spec);
  if (stage != 0) {
    std::vector<DocId> all;
    all.reserve(store.entries().size());
    for (const auto& e : store.entries()) all.push_back(e.id);
    const auto split = split_stages(all, opts.stage2_fraction, opts.seed);
    for (const auto id : stage == 1 ? split.stage1 : split.stage2) allowed.insert(id.value);
    write_json(out / "stages.json", {{"stage", stage},
                                     {"stage2_fraction", mathgen::to_fraction_string(opts.stage2_fraction)},
                                     {"seed", opts.seed},
                                     {"stage1_docs", split.stage1.size()},
                                     {"stage2_docs", split.stage2.size()},
                                     {"stage1_digest", ids_digest(split.stage1)},
                                     {"stage2_digest", ids_digest(split.stage2)}});
  }

  // 2. mix + pack (+ longqa for sft entries)
  RealizeOptions ro;
  ro.allowed_docs = stage != 0 ? &allowed : nullptr;
  ro.teacher = opts.teacher;
  ro.max_in_flight = opts.max_in_flight;
  PackedDatasetWriter writer(dataset_dir);
  auto realized = realize_mixture(spec, store, ro, writer);
  writer.finish({{"recipe", spec.name},
                 {"seed", spec.seed},
                 {"sequences", writer.count()},
                 {"realized_tokens", realized.plan.realized_tokens()}});
  write_plan(out, realized.plan);

  RecipeResult result;
  result.plan = realized.plan;
  result.sequences = writer.count();
  result.longqa_samples = realized.longqa_samples.size();
  bool has_sft_long = false;
  for (const auto& e : spec.entries) has_sft_long |= e.bucket == Bucket::sft_long;
  if (has_sft_long) longqa::write_jsonl(out / "longqa.jsonl", realized.longqa_samples);

  // 3. batch plan
  const auto ds = PackedDataset::open(dataset_dir);
  const std::size_t step_sequences = spec.step_tokens && spec.seq_len ? std::max<std::uint64_t>(1, spec.step_tokens / spec.seq_len) : 0;
  // steps draw from a seeded permutation so each step mixes entries
  std::vector<SequenceCost> costs;
  for (const auto& r : ds.records()) costs.push_back({r.index, sequence_cost(r.skeleton(), opts.cost_key)});
  Rng::keyed({opts.seed, 0x7374657073ULL}).shuffle(costs);
  const std::size_t step = step_sequences ? step_sequences : std::max<std::size_t>(1, costs.size());
  std::vector<MicrobatchPlan> plans;
  for (std::size_t b = 0; b < costs.size(); b += step) {
    const auto chunk = std::span(costs).subspan(b, std::min(step, costs.size() - b));
    plans.push_back(plan_microbatches(plans.size(), chunk, opts.microbatch_size, opts.cost_key));
  }
  std::ofstream bp(out / "batch_plan.jsonl", std::ios::trunc);
  if (!bp) throw IoError("cannot write " + (out / "batch_plan.jsonl").string());
  for (const auto& p : plans) bp << p.to_json().dump() << '\n';
  result.steps = plans.size();
  return result;
}

}  // namespace dataforge
