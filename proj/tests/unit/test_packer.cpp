#include <doctest.h>

#include <set>

#include "dataforge/error.hpp"
#include "dataforge/packer.hpp"
#include "packing_props.hpp"

using namespace dataforge;

namespace {

struct Docs {
  MemoryTokenSource src;
  std::vector<DocId> ids;
  DocId add(std::uint64_t len, TokenId fill = 1) {
    const DocId id{ids.size() + 100};
    std::vector<TokenId> t(len);
    for (std::uint64_t i = 0; i < len; ++i) t[i] = static_cast<TokenId>((fill + i) % 256);
    src.add(id, t);
    ids.push_back(id);
    return id;
  }
};

ShortPackOptions in_order() {
  ShortPackOptions o;
  o.shuffle = false;
  return o;
}

InstructionSample sample(const std::string& id, std::uint64_t ctx, std::uint64_t q, std::uint64_t a) {
  InstructionSample s;
  s.id = id;
  if (ctx) s.spans.push_back({SegmentRole::context, std::vector<TokenId>(ctx, 7), DocId{1}, 0});
  if (q) s.spans.push_back({SegmentRole::question, std::vector<TokenId>(q, 8), DocId{1}, 0});
  if (a) s.spans.push_back({SegmentRole::answer, std::vector<TokenId>(a, 9), DocId{1}, 0});
  return s;
}

}  // namespace

TEST_CASE("short packing: [5,7,4] at L=8 in input order") {
  Docs d;
  const auto a = d.add(5), b = d.add(7), c = d.add(4);
  const auto r = pack_short(d.src, d.ids, 8, in_order());
  REQUIRE(r.sequences.size() == 1);
  const auto& s = r.sequences[0];
  REQUIRE(s.segments.size() == 2);
  CHECK(s.segments[0] == SegmentRef{a, 0, 0, 5, true, SegmentRole::pretrain, 0});
  CHECK(s.segments[1] == SegmentRef{b, 0, 5, 3, true, SegmentRole::pretrain, 1});
  CHECK(s.boundaries() == std::vector<std::uint64_t>{5, 8});
  // doc2's remaining 4 tokens are discarded; doc3 starts the next sequence but is too short to finish it
  CHECK(r.stats.tokens_consumed == 16);
  CHECK(r.stats.tokens_emitted == 8);
  CHECK(r.stats.tail_dropped == 4);
  CHECK(r.stats.tokens_discarded == 4 + 4);
  (void)c;
}

TEST_CASE("short packing edge cases") {
  {
    Docs d;
    d.add(8);
    const auto r = pack_short(d.src, d.ids, 8, in_order());
    REQUIRE(r.sequences.size() == 1);
    CHECK(r.sequences[0].segments.size() == 1);
    CHECK(r.stats.tokens_discarded == 0);
  }
  {
    Docs d;
    d.add(3);
    d.add(3);
    const auto r = pack_short(d.src, d.ids, 8, in_order());
    CHECK(r.sequences.empty());
    CHECK(r.stats.tokens_discarded == 6);
    CHECK(r.stats.tail_dropped == 6);
  }
  {
    Docs d;
    const auto r = pack_short(d.src, d.ids, 8);
    CHECK(r.sequences.empty());
  }
}

TEST_CASE("short packing is seed-deterministic") {
  Docs d;
  for (int i = 0; i < 40; ++i) d.add(3 + i % 11, static_cast<TokenId>(i));
  ShortPackOptions o;
  o.seed = 9;
  const auto a = pack_short(d.src, d.ids, 16, o);
  const auto b = pack_short(d.src, d.ids, 16, o);
  CHECK(a.sequences == b.sequences);
  o.seed = 10;
  const auto c = pack_short(d.src, d.ids, 16, o);
  CHECK(a.sequences != c.sequences);
}

TEST_CASE("long packing: filter, exact fit, super-long windows") {
  const std::uint64_t L = 16;
  Docs d;
  const auto too_short = d.add(L - 1);
  const auto exact = d.add(L);
  const auto big = d.add(10 * L);
  LongPackOptions o;
  o.seed = 3;
  o.superlong_factor = 4;
  o.max_segments = 3;
  const auto r = make_long_sequences(d.src, d.ids, L, o);
  CHECK(r.stats.filtered_docs == 1);
  CHECK(r.stats.superlong_docs == 1);
  std::vector<std::uint64_t> big_offsets;
  for (const auto& s : r.sequences) {
    REQUIRE(s.segments.size() == 1);
    CHECK(s.segments[0].doc_id != too_short);
    if (s.segments[0].doc_id == exact) CHECK(s.segments[0].doc_start == 0);
    if (s.segments[0].doc_id == big) big_offsets.push_back(s.segments[0].doc_start);
    check_sequence(s, &d.src);
  }
  REQUIRE(big_offsets.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) {
      const bool disjoint = big_offsets[i] + L <= big_offsets[j] || big_offsets[j] + L <= big_offsets[i];
      CHECK(disjoint);
    }
}

TEST_CASE("long windows depend on doc id and seed, not on traversal order") {
  LongPackOptions o;
  o.seed = 77;
  const auto w1 = long_window_offsets(DocId{5}, 1000, 64, o);
  const auto w2 = long_window_offsets(DocId{5}, 1000, 64, o);
  CHECK(w1 == w2);
  CHECK(w1.size() == 4);
  CHECK(long_window_offsets(DocId{5}, 63, 64, o).empty());
  // between L and factor*L: a single window anywhere in [0, len-L]
  const auto one = long_window_offsets(DocId{6}, 200, 64, o);
  REQUIRE(one.size() == 1);
  CHECK(one[0] <= 136);
}

TEST_CASE("grouped packing: four 64K documents into 256K") {
  const std::uint64_t sub = 65536;
  std::vector<PackedSequence> parts;
  for (std::uint64_t i = 0; i < 4; ++i) {
    PackedSequence p;
    p.length = sub;
    p.tokens.assign(sub, static_cast<TokenId>(i));
    p.segments.push_back({DocId{i + 1}, 0, 0, sub, true, SegmentRole::pretrain, 0});
    parts.push_back(std::move(p));
  }
  const auto g = pack_grouped(parts, 262144);
  REQUIRE(g.segments.size() == 4);
  CHECK(g.segments[0].seq_start == 0);
  CHECK(g.segments[1].seq_start == 65536);
  CHECK(g.segments[2].seq_start == 131072);
  CHECK(g.segments[3].seq_start == 196608);
  CHECK(g.boundaries() == std::vector<std::uint64_t>{65536, 131072, 196608, 262144});
  CHECK(g.sum_doc_lengths_sq() == 4 * sub * sub);

  CHECK(pack_grouped(std::span(parts).first(1), sub) == parts[0]);
  CHECK_THROWS_AS(pack_grouped(std::span(parts).first(3), 262144), ValidationError);
  auto dup = parts;
  dup[3] = dup[0];
  CHECK_THROWS_AS(pack_grouped(dup, 262144), ValidationError);
}

TEST_CASE("sft packing: [100, 50] at L=200 gets 50 pad tokens") {
  const std::vector<InstructionSample> s{sample("a", 60, 20, 20), sample("b", 30, 10, 10)};
  const auto seqs = pack_sft(s, 200);
  REQUIRE(seqs.size() == 1);
  const auto& q = seqs[0];
  CHECK(q.tokens.size() == 200);
  REQUIRE(q.segments.size() == 7);
  const auto& pad = q.segments.back();
  CHECK(pad.role == SegmentRole::pad);
  CHECK(pad.length == 50);
  CHECK_FALSE(pad.loss);
  for (std::uint64_t i = 150; i < 200; ++i) CHECK(q.tokens[i] == kPadToken);
  for (const auto& seg : q.segments) CHECK(seg.loss == (seg.role == SegmentRole::answer));
  CHECK(q.boundaries() == std::vector<std::uint64_t>{100, 150, 200});
}

TEST_CASE("sft packing edge cases") {
  const auto exact = pack_sft(std::vector{sample("x", 100, 50, 50)}, 200);
  REQUIRE(exact.size() == 1);
  CHECK(exact[0].segments.back().role == SegmentRole::answer);

  try {
    (void)pack_sft(std::vector{sample("too-long", 100, 50, 51)}, 200);
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("too-long") != std::string::npos);
  }

  // a sample that does not fit starts the next sequence
  const auto two = pack_sft(std::vector{sample("a", 100, 0, 50), sample("b", 60, 0, 20)}, 200);
  CHECK(two.size() == 2);

  SftPackOptions all;
  all.answer_only_loss = false;
  const auto full = pack_sft(std::vector{sample("a", 10, 5, 5)}, 30, all);
  for (const auto& seg : full[0].segments) CHECK(seg.loss == (seg.role != SegmentRole::pad));
}

TEST_CASE("dense masks") {
  PackedSequence one;
  one.length = 4;
  one.tokens.assign(4, 1);
  one.segments.push_back({DocId{1}, 0, 0, 4, true, SegmentRole::pretrain, 0});
  const auto m1 = boundaries_to_mask(one);
  for (std::uint64_t i = 0; i < 4; ++i)
    for (std::uint64_t j = 0; j < 4; ++j) CHECK(m1.at(i, j) == (j <= i));

  PackedSequence two = one;
  two.segments = {{DocId{1}, 0, 0, 2, true, SegmentRole::pretrain, 0}, {DocId{2}, 0, 2, 2, true, SegmentRole::pretrain, 1}};
  const auto m2 = boundaries_to_mask(two);
  std::set<std::pair<int, int>> allowed;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (m2.at(i, j)) allowed.insert({i, j});
  CHECK(allowed == std::set<std::pair<int, int>>{{0, 0}, {1, 0}, {1, 1}, {2, 2}, {3, 2}, {3, 3}});

  PackedSequence padded = one;
  padded.tokens[3] = kPadToken;
  padded.segments = {{DocId{1}, 0, 0, 3, true, SegmentRole::pretrain, 0}, {DocId{}, 0, 3, 1, false, SegmentRole::pad, 1}};
  const auto m3 = boundaries_to_mask(padded);
  for (int j = 0; j < 4; ++j) CHECK(m3.at(3, j) == (j == 3));

  PackedSequence big;
  big.length = 2048;
  CHECK_THROWS_AS(boundaries_to_mask(big), ValidationError);
}

TEST_CASE("sft context, question and answer of one sample share attention") {
  const auto seqs = pack_sft(std::vector{sample("a", 2, 1, 1), sample("b", 1, 0, 1)}, 8);
  const auto m = boundaries_to_mask(seqs[0]);
  CHECK(m.at(3, 0));   // answer of a sees its context
  CHECK_FALSE(m.at(4, 3));  // b does not see a
  CHECK(m.at(5, 4));
  CHECK(m.at(7, 7));
  CHECK_FALSE(m.at(7, 6));
}

TEST_CASE("packing properties (small run)") {
  const auto rep = dftest::run_packing_properties(2000, 1);
  for (const auto& v : rep.violations) MESSAGE(v);
  CHECK(rep.violation_count == 0);
  CHECK(rep.cases == 2000);
  CHECK(rep.masks_checked > 1000);
}
