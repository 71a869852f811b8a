#include "dataforge/batch_planner.hpp"

#include <algorithm>
#include <string>

#include "dataforge/error.hpp"

namespace dataforge {

std::string_view to_string(CostKey key) { return key == CostKey::sum_len ? "sum_len" : "sum_len_sq"; }

CostKey parse_cost_key(std::string_view s) {
  if (s == "sum_len") return CostKey::sum_len;
  if (s == "sum_len_sq") return CostKey::sum_len_sq;
  throw ValidationError("unknown cost key '" + std::string(s) + "' (expected sum_len or sum_len_sq)");
}

std::uint64_t sequence_cost(const PackedSequence& seq, CostKey key) {
  return key == CostKey::sum_len ? seq.sum_doc_lengths() : seq.sum_doc_lengths_sq();
}

MicrobatchPlan plan_microbatches(std::size_t step_id, std::span<const SequenceCost> sequences,
                                 std::size_t microbatch_size, CostKey key) {
  if (microbatch_size < 1) throw ValidationError("microbatch size must be >= 1");
  std::vector<SequenceCost> order(sequences.begin(), sequences.end());
  std::sort(order.begin(), order.end(), [](const SequenceCost& a, const SequenceCost& b) {
    return a.cost != b.cost ? a.cost > b.cost : a.id < b.id;
  });

  MicrobatchPlan plan;
  plan.step_id = step_id;
  plan.key = key;
  for (std::size_t i = 0; i < order.size(); i += microbatch_size) {
    Microbatch mb;
    for (std::size_t j = i; j < i + microbatch_size; ++j) {
      if (j < order.size()) {
        mb.slots.emplace_back(order[j].id);
        mb.cost += order[j].cost;
      } else {
        mb.slots.emplace_back(std::nullopt);
        ++plan.padded_slots;
      }
    }
    plan.microbatches.push_back(std::move(mb));
  }
  return plan;
}

std::vector<MicrobatchPlan> plan_dataset(const PackedDataset& dataset, std::size_t step_sequences,
                                         std::size_t microbatch_size, CostKey key) {
  const auto& recs = dataset.records();
  const std::size_t step = step_sequences == 0 ? std::max<std::size_t>(recs.size(), 1) : step_sequences;
  std::vector<MicrobatchPlan> plans;
  for (std::size_t begin = 0; begin < recs.size(); begin += step) {
    std::vector<SequenceCost> costs;
    for (std::size_t i = begin; i < std::min(recs.size(), begin + step); ++i) {
      costs.push_back({recs[i].index, sequence_cost(recs[i].skeleton(), key)});
    }
    plans.push_back(plan_microbatches(plans.size(), costs, microbatch_size, key));
  }
  return plans;
}

nlohmann::json MicrobatchPlan::to_json() const {
  nlohmann::json mbs = nlohmann::json::array();
  nlohmann::json costs = nlohmann::json::array();
  for (const auto& mb : microbatches) {
    nlohmann::json slots = nlohmann::json::array();
    for (const auto& s : mb.slots) slots.push_back(s ? nlohmann::json(*s) : nlohmann::json(nullptr));
    mbs.push_back(std::move(slots));
    costs.push_back(mb.cost);
  }
  return {{"step_id", step_id},
          {"key_kind", std::string(to_string(key))},
          {"microbatches", std::move(mbs)},
          {"cost_keys", std::move(costs)},
          {"padded_slots", padded_slots}};
}

}  // namespace dataforge
