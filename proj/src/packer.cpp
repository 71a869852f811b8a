#include "dataforge/packer.hpp"

#include <algorithm>
#include <set>

#include "dataforge/error.hpp"
#include "dataforge/rng.hpp"

namespace dataforge {

std::string_view to_string(SegmentRole role) {
  switch (role) {
    case SegmentRole::pretrain: return "pretrain";
    case SegmentRole::context: return "context";
    case SegmentRole::question: return "question";
    case SegmentRole::answer: return "answer";
    case SegmentRole::pad: return "pad";
  }
  return "pretrain";
}

SegmentRole parse_segment_role(std::string_view s) {
  if (s == "pretrain") return SegmentRole::pretrain;
  if (s == "context") return SegmentRole::context;
  if (s == "question") return SegmentRole::question;
  if (s == "answer") return SegmentRole::answer;
  if (s == "pad") return SegmentRole::pad;
  throw ValidationError("unknown segment role '" + std::string(s) + "'");
}

namespace {

// Lengths of consecutive attention blocks in order, with the pad flag.
std::vector<std::pair<std::uint64_t, bool>> group_runs(const PackedSequence& seq) {
  std::vector<std::pair<std::uint64_t, bool>> runs;
  bool have = false;
  std::uint32_t cur = 0;
  for (const auto& s : seq.segments) {
    const bool pad = s.role == SegmentRole::pad;
    if (have && s.group == cur && !pad && !runs.back().second) {
      runs.back().first += s.length;
    } else {
      runs.emplace_back(s.length, pad);
    }
    have = true;
    cur = s.group;
  }
  return runs;
}

}  // namespace

std::vector<std::uint64_t> PackedSequence::boundaries() const {
  std::vector<std::uint64_t> out;
  std::uint64_t end = 0;
  for (const auto& [len, pad] : group_runs(*this)) {
    end += len;
    out.push_back(end);
  }
  return out;
}

std::uint64_t PackedSequence::sum_doc_lengths() const {
  std::uint64_t total = 0;
  for (const auto& [len, pad] : group_runs(*this))
    if (!pad) total += len;
  return total;
}

std::uint64_t PackedSequence::sum_doc_lengths_sq() const {
  std::uint64_t total = 0;
  for (const auto& [len, pad] : group_runs(*this))
    if (!pad) total += len * len;
  return total;
}

std::uint64_t MemoryTokenSource::length(DocId id) const {
  auto it = docs_.find(id.value);
  if (it == docs_.end()) throw NotFoundError("document " + id.hex() + " not found");
  return it->second.size();
}

std::vector<TokenId> MemoryTokenSource::read(DocId id, std::uint64_t start, std::uint64_t len) const {
  auto it = docs_.find(id.value);
  if (it == docs_.end()) throw NotFoundError("document " + id.hex() + " not found");
  const auto& v = it->second;
  if (start > v.size() || len > v.size() - start) throw ValidationError("read past end of " + id.hex());
  return {v.begin() + static_cast<std::ptrdiff_t>(start), v.begin() + static_cast<std::ptrdiff_t>(start + len)};
}

ShortPackResult pack_short(const TokenSource& docs, std::span<const DocId> doc_ids, std::uint64_t L,
                           const ShortPackOptions& opts) {
  if (L < 1) throw ValidationError("pack_short: L must be >= 1");
  std::vector<DocId> order(doc_ids.begin(), doc_ids.end());
  if (opts.shuffle) Rng::keyed({opts.seed, 0x73686f7274ULL}).shuffle(order);

  ShortPackResult result;
  auto& st = result.stats;
  PackedSequence cur;
  cur.length = L;
  cur.tokens.reserve(L);

  for (const DocId id : order) {
    if (opts.max_sequences && result.sequences.size() >= opts.max_sequences) break;
    const std::uint64_t len = docs.length(id);
    if (len == 0) {
      ++st.docs_consumed;
      continue;
    }
    const std::uint64_t pos = cur.tokens.size();
    const std::uint64_t take = std::min(len, L - pos);
    auto toks = docs.read(id, 0, take);
    cur.tokens.insert(cur.tokens.end(), toks.begin(), toks.end());
    cur.segments.push_back(SegmentRef{id, 0, pos, take, true, SegmentRole::pretrain,
                                      static_cast<std::uint32_t>(cur.segments.size())});
    st.tokens_consumed += len;
    st.tokens_discarded += len - take;
    ++st.docs_consumed;
    if (cur.tokens.size() == L) {
      st.tokens_emitted += L;
      result.sequences.push_back(std::move(cur));
      cur = PackedSequence{};
      cur.length = L;
      cur.tokens.reserve(L);
    }
  }
  st.tail_dropped = cur.tokens.size();
  st.tokens_discarded += cur.tokens.size();
  return result;
}

std::vector<std::uint64_t> long_window_offsets(DocId id, std::uint64_t doc_length, std::uint64_t L,
                                               const LongPackOptions& opts) {
  if (L < 1) throw ValidationError("make_long_sequences: L must be >= 1");
  if (opts.superlong_factor < 1 || opts.max_segments < 1) {
    throw ValidationError("make_long_sequences: superlong_factor and max_segments must be >= 1");
  }
  if (doc_length < L) return {};
  const bool superlong = doc_length / L >= opts.superlong_factor;
  const std::uint64_t k = superlong ? std::min(doc_length / L, opts.max_segments) : 1;
  // k windows with sorted gaps g_0 <= ... <= g_{k-1} in [0, slack]; window i
  // starts at g_i + i*L, so consecutive windows never overlap.
  const std::uint64_t slack = doc_length - k * L;
  Rng rng = Rng::keyed({opts.seed, id.value, 0x6c6f6e67ULL});
  std::vector<std::uint64_t> gaps(k);
  for (auto& g : gaps) g = rng.below(slack + 1);
  std::sort(gaps.begin(), gaps.end());
  for (std::uint64_t i = 0; i < k; ++i) gaps[i] += i * L;
  return gaps;
}

LongPackResult make_long_sequences(const TokenSource& docs, std::span<const DocId> doc_ids, std::uint64_t L,
                                   const LongPackOptions& opts) {
  LongPackResult result;
  for (const DocId id : doc_ids) {
    if (opts.max_sequences && result.sequences.size() >= opts.max_sequences) break;
    const std::uint64_t len = docs.length(id);
    const auto offsets = long_window_offsets(id, len, L, opts);
    if (offsets.empty()) {
      ++result.stats.filtered_docs;
      continue;
    }
    ++result.stats.docs_used;
    if (len / L >= opts.superlong_factor) ++result.stats.superlong_docs;
    for (const auto off : offsets) {
      if (opts.max_sequences && result.sequences.size() >= opts.max_sequences) break;
      PackedSequence seq;
      seq.length = L;
      seq.tokens = docs.read(id, off, L);
      seq.segments.push_back(SegmentRef{id, off, 0, L, true, SegmentRole::pretrain, 0});
      result.sequences.push_back(std::move(seq));
    }
  }
  return result;
}

PackedSequence pack_grouped(std::span<const PackedSequence> subsequences, std::uint64_t L) {
  const std::uint64_t k = subsequences.size();
  if (k == 0) throw ValidationError("pack_grouped: no subsequences");
  const std::uint64_t sub = subsequences.front().length;
  if (k * sub != L) {
    throw ValidationError("pack_grouped: " + std::to_string(k) + " x " + std::to_string(sub) +
                          " != L = " + std::to_string(L));
  }
  std::set<std::uint64_t> seen;
  PackedSequence out;
  out.length = L;
  out.tokens.reserve(L);
  for (std::uint64_t i = 0; i < k; ++i) {
    const auto& s = subsequences[i];
    if (s.length != sub || s.tokens.size() != sub) throw ValidationError("pack_grouped: subsequence lengths differ");
    if (s.segments.size() != 1) throw ValidationError("pack_grouped: subsequence must have exactly one segment");
    if (!seen.insert(s.segments[0].doc_id.value).second) {
      throw ValidationError("pack_grouped: document " + s.segments[0].doc_id.hex() +
                            " appears more than once; nested documents must be different");
    }
    SegmentRef seg = s.segments[0];
    seg.seq_start = i * sub;
    seg.group = static_cast<std::uint32_t>(i);
    out.segments.push_back(seg);
    out.tokens.insert(out.tokens.end(), s.tokens.begin(), s.tokens.end());
  }
  return out;
}

std::uint64_t InstructionSample::token_length() const {
  std::uint64_t n = 0;
  for (const auto& s : spans) n += s.tokens.size();
  return n;
}

std::vector<PackedSequence> pack_sft(std::span<const InstructionSample> samples, std::uint64_t L,
                                     const SftPackOptions& opts) {
  if (L < 1) throw ValidationError("pack_sft: L must be >= 1");
  for (const auto& s : samples) {
    if (s.token_length() > L) {
      throw ValidationError("pack_sft: sample '" + s.id + "' has " + std::to_string(s.token_length()) +
                            " tokens, longer than L = " + std::to_string(L));
    }
    if (s.token_length() == 0) throw ValidationError("pack_sft: sample '" + s.id + "' is empty");
  }

  std::vector<PackedSequence> out;
  PackedSequence cur;
  std::uint32_t group = 0;
  const auto emit = [&] {
    const std::uint64_t used = cur.tokens.size();
    if (used < L) {
      cur.segments.push_back(SegmentRef{DocId{}, 0, used, L - used, false, SegmentRole::pad, group});
      cur.tokens.resize(L, kPadToken);
    }
    cur.length = L;
    out.push_back(std::move(cur));
    cur = PackedSequence{};
    group = 0;
  };

  for (const auto& s : samples) {
    if (cur.tokens.size() + s.token_length() > L) emit();
    for (const auto& span : s.spans) {
      if (span.tokens.empty()) continue;
      const bool loss = opts.answer_only_loss ? span.role == SegmentRole::answer : true;
      cur.segments.push_back(
          SegmentRef{span.doc_id, span.doc_start, cur.tokens.size(), span.tokens.size(), loss, span.role, group});
      cur.tokens.insert(cur.tokens.end(), span.tokens.begin(), span.tokens.end());
    }
    ++group;
  }
  if (!cur.tokens.empty()) emit();
  return out;
}

DenseMask boundaries_to_mask(const PackedSequence& seq, std::uint64_t ceiling) {
  const std::uint64_t L = seq.length;
  if (L > ceiling) {
    throw ValidationError("boundaries_to_mask: L = " + std::to_string(L) + " exceeds the dense ceiling " +
                          std::to_string(ceiling) + "; use PackedSequence::boundaries() instead");
  }
  DenseMask m;
  m.size = L;
  m.allowed.assign(L * L, 0);
  std::uint64_t start = 0;
  for (const auto& [len, pad] : group_runs(seq)) {
    for (std::uint64_t i = start; i < start + len && i < L; ++i) {
      if (pad) {
        m.allowed[i * L + i] = 1;  // pad attends only itself
        continue;
      }
      for (std::uint64_t j = start; j <= i; ++j) m.allowed[i * L + j] = 1;
    }
    start += len;
  }
  return m;
}

void check_sequence(const PackedSequence& seq, const TokenSource* docs) {
  if (seq.tokens.size() != seq.length) {
    throw ValidationError("sequence has " + std::to_string(seq.tokens.size()) + " tokens, expected L = " +
                          std::to_string(seq.length));
  }
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < seq.segments.size(); ++i) {
    const auto& s = seq.segments[i];
    const auto where = "segment " + std::to_string(i);
    if (s.seq_start != pos) throw ValidationError(where + ": not contiguous (seq_start " + std::to_string(s.seq_start) + ")");
    if (s.length == 0) throw ValidationError(where + ": zero length");
    if (s.role == SegmentRole::pad) {
      if (i + 1 != seq.segments.size()) throw ValidationError(where + ": pad segment must be last");
      if (s.loss) throw ValidationError(where + ": pad segment carries loss");
      for (std::uint64_t p = 0; p < s.length; ++p)
        if (seq.tokens[s.seq_start + p] != kPadToken) throw ValidationError(where + ": non-pad token in pad run");
    }
    pos += s.length;
  }
  if (pos != seq.length) {
    throw ValidationError("segment lengths sum to " + std::to_string(pos) + ", expected " + std::to_string(seq.length));
  }
  if (docs == nullptr) return;
  for (std::size_t i = 0; i < seq.segments.size(); ++i) {
    const auto& s = seq.segments[i];
    if (s.role != SegmentRole::pretrain && s.role != SegmentRole::context) continue;
    const auto src = docs->read(s.doc_id, s.doc_start, s.length);
    if (!std::equal(src.begin(), src.end(), seq.tokens.begin() + static_cast<std::ptrdiff_t>(s.seq_start))) {
      throw ValidationError("segment " + std::to_string(i) + ": tokens differ from document " + s.doc_id.hex());
    }
  }
}

}  // namespace dataforge
