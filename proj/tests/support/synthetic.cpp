#include "synthetic.hpp"

#include <array>
#include <unistd.h>

namespace dftest {

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("dataforge-test-" + std::to_string(::getpid()) + "-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ScratchDir::~ScratchDir() {
  std::error_code ec;
  fs::remove_all(path, ec);
}

namespace {

constexpr std::array kWords = {
    "river",  "stone",   "market", "signal", "garden", "window", "engine",  "theory", "harbor", "lantern",
    "copper", "meadow",  "thread", "valley", "orbit",  "letter", "bridge",  "forest", "pocket", "ladder",
    "silver", "candle",  "mirror", "winter", "number", "planet", "station", "circle", "shadow", "anchor",
    "matrix", "village", "tunnel", "glacier", "record", "signal", "pattern", "method", "result", "answer",
    "the",    "a",       "of",     "and",    "under",  "near",   "with",    "every",  "many",   "seven"};

}  // namespace

std::string prose(dataforge::Rng& rng, std::size_t min_bytes) {
  std::string out;
  out.reserve(min_bytes + 128);
  while (out.size() < min_bytes) {
    const auto n = 4 + rng.below(12);
    for (std::uint64_t i = 0; i < n; ++i) {
      std::string w = kWords[rng.below(kWords.size())];
      if (i == 0) w[0] = static_cast<char>(w[0] - 'a' + 'A');
      out += w;
      out += i + 1 == n ? "" : " ";
    }
    out += rng.below(10) == 0 ? "? " : ". ";
  }
  return out;
}

std::size_t populate(dataforge::CorpusStore& store, const std::vector<SourceLayout>& layout, std::uint64_t seed) {
  std::size_t added = 0;
  for (const auto& l : layout) {
    auto rng = dataforge::Rng::keyed({seed, dataforge::fnv1a64(l.source), l.min_len});
    for (std::size_t i = 0; i < l.count; ++i) {
      const auto len = l.min_len + rng.below(l.max_len - l.min_len + 1);
      if (l.instruction) {
        const auto prompt = "Q" + std::to_string(i) + ": " + prose(rng, len / 3);
        added += store.append_instruction(l.source, prompt, prose(rng, len - std::min(len, prompt.size())));
      } else {
        added += store.append_text(l.source, prose(rng, len));
      }
    }
  }
  store.flush();
  return added;
}

std::vector<SourceLayout> recipe_layout() {
  return {
      {"code_repos", 20, 290'000, 310'000},
      {"code_repos", 8, 70'000, 90'000},
      {"books", 20, 290'000, 310'000},
      {"books", 8, 70'000, 90'000},
      {"textbooks", 10, 270'000, 300'000},
      {"fineweb_edu", 26'000, 60, 180},
      {"fineweb", 26'000, 60, 180},
      {"wikipedia", 14'000, 60, 180},
      {"openwebmath", 14'000, 60, 180},
      {"stackexchange", 12'000, 60, 180},
      {"arxiv", 260, 1'000, 6'000},
      {"dclm", 320, 1'000, 6'000},
      {"ultrachat", 4'000, 200, 400, true},
      {"openmathinstruct2", 2'000, 150, 350, true},
      {"mmlu_aux", 1'200, 200, 400, true},
      {"tulu3_if", 1'200, 200, 400, true},
  };
}

std::vector<SourceLayout> sft_layout() {
  return {
      {"books", 6, 140'000, 200'000},
      {"books", 6, 9'000, 60'000},
      {"arxiv", 120, 1'000, 6'000},
      {"dclm", 120, 1'000, 6'000},
      {"ultrachat", 1'600, 200, 400, true},
      {"openmathinstruct2", 1'600, 150, 350, true},
      {"mmlu_aux", 1'200, 200, 400, true},
      {"tulu3_if", 1'200, 200, 400, true},
  };
}

}  // namespace dftest
