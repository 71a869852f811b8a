#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dataforge/packed_dataset.hpp"
#include "dataforge/packer.hpp"

namespace dataforge {

// sum_len:    Σ non-pad document lengths (equals L for fully packed sequences)
// sum_len_sq: Σ squared document lengths, a proxy for variable-length attention cost
enum class CostKey { sum_len, sum_len_sq };

std::string_view to_string(CostKey key);
CostKey parse_cost_key(std::string_view s);

std::uint64_t sequence_cost(const PackedSequence& seq, CostKey key);

struct SequenceCost {
  std::size_t id = 0;
  std::uint64_t cost = 0;
};

struct Microbatch {
  std::vector<std::optional<std::size_t>> slots;  // nullopt marks a padding slot
  std::uint64_t cost = 0;
};

struct MicrobatchPlan {
  std::size_t step_id = 0;
  CostKey key = CostKey::sum_len_sq;
  std::vector<Microbatch> microbatches;
  std::size_t padded_slots = 0;

  nlohmann::json to_json() const;
};

/// Sorts by cost descending (ties: id ascending) and chunks into microbatches
/// of `microbatch_size`, so later microbatches are cheaper.
MicrobatchPlan plan_microbatches(std::size_t step_id, std::span<const SequenceCost> sequences,
                                 std::size_t microbatch_size, CostKey key);

/// Splits a dataset into steps of `step_sequences` consecutive sequences
/// (0 = a single step) and plans each.
std::vector<MicrobatchPlan> plan_dataset(const PackedDataset& dataset, std::size_t step_sequences,
                                         std::size_t microbatch_size, CostKey key);

}  // namespace dataforge
