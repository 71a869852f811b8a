#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "dataforge/checkpoint.hpp"

namespace dataforge {

/// Elementwise weighted mean of >= 2 checkpoints with identical name->shape
/// maps. Weights are normalized to sum 1 (uniform when absent), accumulated
/// in double and stored as float. Per element the weighted terms are sorted
/// and summed pairwise, so the result does not depend on input order.
Checkpoint average_checkpoints(std::span<const Checkpoint> inputs,
                               std::optional<std::span<const double>> weights = std::nullopt);

Checkpoint average_checkpoint_files(std::span<const std::filesystem::path> paths,
                                    std::optional<std::span<const double>> weights = std::nullopt,
                                    bool allow_nonfinite = false);

}  // namespace dataforge
