#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dataforge/corpus_store.hpp"
#include "dataforge/rng.hpp"

namespace dftest {

namespace fs = std::filesystem;

/// Fresh empty directory under the system temp dir.
fs::path scratch_dir(const std::string& name);

/// Removes the directory on scope exit.
struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& name) : path(scratch_dir(name)) {}
  ~ScratchDir();
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
};

/// English-ish sentences ("Word word word."), at least min_bytes long.
std::string prose(dataforge::Rng& rng, std::size_t min_bytes);

struct SourceLayout {
  std::string source;
  std::size_t count = 0;
  std::uint64_t min_len = 0;  // bytes (= tokens under the byte tokenizer)
  std::uint64_t max_len = 0;
  bool instruction = false;
};

/// Appends generated documents; returns how many were added.
std::size_t populate(dataforge::CorpusStore& store, const std::vector<SourceLayout>& layout, std::uint64_t seed);

/// Every source the built-in recipes use, sized so that all three recipes
/// realize a 2M-token budget; more than 100,000 documents in total.
std::vector<SourceLayout> recipe_layout();

/// Only what the SFT recipe needs, for quicker runs.
std::vector<SourceLayout> sft_layout();

}  // namespace dftest
