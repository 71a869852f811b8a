#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dataforge {

// Rule-based sentence splitter. A boundary follows a run of '.', '?' or '!'
// (plus any closing quotes/brackets) when the next characters are whitespace
// and then an uppercase ASCII letter, a digit, or an opening quote. The
// whitespace belongs to the following sentence, so joining the pieces
// reproduces the input byte for byte.
std::vector<std::string> split_sentences(std::string_view text);

/// Byte offsets where each sentence ends (last entry == text.size()).
std::vector<std::size_t> sentence_ends(std::string_view text);

}  // namespace dataforge
