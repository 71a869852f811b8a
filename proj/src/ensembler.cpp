#include "dataforge/ensembler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dataforge/error.hpp"

namespace dataforge {

namespace {

// Pairwise (cascade) summation of an already-ordered range.
double pairwise_sum(const double* v, std::size_t n) {
  if (n == 0) return 0.0;
  if (n == 1) return v[0];
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

double order_free_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  return pairwise_sum(terms.data(), terms.size());
}

}  // namespace

Checkpoint average_checkpoints(std::span<const Checkpoint> inputs, std::optional<std::span<const double>> weights) {
  const std::size_t k = inputs.size();
  if (k < 2) throw ValidationError("ensembling needs at least 2 checkpoints, got " + std::to_string(k));
  if (weights && weights->size() != k) {
    throw ValidationError("got " + std::to_string(weights->size()) + " weights for " + std::to_string(k) + " checkpoints");
  }

  std::vector<std::string> problems;
  for (std::size_t i = 1; i < k; ++i) {
    for (const auto& d : structural_diff(inputs[0], inputs[i])) problems.push_back("input 1 vs " + std::to_string(i + 1) + ": " + d);
  }
  if (!problems.empty()) {
    std::string msg = "checkpoint structures differ:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }

  std::vector<double> w(k, 1.0);
  if (weights) {
    for (std::size_t i = 0; i < k; ++i) {
      const double wi = (*weights)[i];
      if (!std::isfinite(wi) || wi < 0.0) throw ValidationError("weight " + std::to_string(i + 1) + " must be a finite value >= 0");
      w[i] = wi;
    }
  }
  std::vector<double> sorted_w = w;
  const double total = order_free_sum(sorted_w);
  if (!(total > 0.0)) throw ValidationError("weights sum to zero");
  for (auto& wi : w) wi /= total;

  Checkpoint out;
  std::vector<std::string> runs;
  for (const auto& c : inputs) runs.push_back(c.metadata.run_id);
  std::sort(runs.begin(), runs.end());
  out.metadata.run_id = "ensemble";
  out.metadata.constituents = runs;
  std::optional<std::uint64_t> step;
  for (const auto& c : inputs)
    if (c.metadata.step) step = std::max(step.value_or(0), *c.metadata.step);
  out.metadata.step = step;

  std::vector<double> terms(k);
  for (const auto& [name, first] : inputs[0].tensors) {
    Tensor t;
    t.shape = first.shape;
    t.data.resize(first.data.size());
    std::vector<const Tensor*> srcs;
    for (const auto& c : inputs) srcs.push_back(&c.tensors.at(name));
    for (std::size_t e = 0; e < t.data.size(); ++e) {
      for (std::size_t i = 0; i < k; ++i) {
        const float x = srcs[i]->data[e];
        if (!std::isfinite(x)) {
          throw ValidationError("input " + std::to_string(i + 1) + ": tensor '" + name + "' has a non-finite value at index " +
                                std::to_string(e));
        }
        terms[i] = w[i] * static_cast<double>(x);
      }
      t.data[e] = static_cast<float>(order_free_sum(terms));
    }
    out.tensors.emplace(name, std::move(t));
  }
  return out;
}

Checkpoint average_checkpoint_files(std::span<const std::filesystem::path> paths,
                                    std::optional<std::span<const double>> weights, bool allow_nonfinite) {
  std::vector<Checkpoint> inputs;
  inputs.reserve(paths.size());
  for (const auto& p : paths) inputs.push_back(read_checkpoint(p, allow_nonfinite));
  return average_checkpoints(inputs, weights);
}

}  // namespace dataforge
