#include "dataforge/longqa.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "dataforge/error.hpp"
#include "dataforge/rng.hpp"
#include "dataforge/sentences.hpp"

namespace dataforge::longqa {

using json = nlohmann::json;

json SubpartSpan::to_json() const {
  return {{"doc_id", doc_id.hex()},
          {"start_sentence", start_sentence},
          {"end_sentence", end_sentence},
          {"token_start", token_start},
          {"token_length", token_length}};
}

std::string_view to_string(SampleKind kind) { return kind == SampleKind::single_doc ? "single_doc" : "concat"; }

SubpartSpan select_subpart(DocId id, std::span<const std::uint64_t> lens, std::uint64_t seed,
                           std::uint64_t min_tokens, std::uint64_t max_tokens) {
  const std::size_t n = lens.size();
  if (n == 0) throw ValidationError("select_subpart: document " + id.hex() + " has no sentences");
  std::vector<std::uint64_t> prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + lens[i];
  const auto span_len = [&](std::size_t s, std::size_t e) { return prefix[e] - prefix[s]; };
  const auto make = [&](std::size_t s, std::size_t e) {
    return SubpartSpan{id, s, e, prefix[s], span_len(s, e)};
  };

  Rng rng = Rng::keyed({seed, id.value, 0x73756270617274ULL});
  const auto target = static_cast<std::uint64_t>(
      rng.between(static_cast<std::int64_t>(min_tokens), static_cast<std::int64_t>(max_tokens)));
  const auto random_start = static_cast<std::size_t>(rng.below(n));

  std::size_t start = random_start;
  std::size_t end = start;
  while (end < n && span_len(start, end) < target) ++end;
  while (span_len(start, end) > max_tokens && start + 1 < end) ++start;
  const auto len = span_len(start, end);
  if (len >= min_tokens && len <= max_tokens) return make(start, end);

  // Fallback: among the shortest valid window for each start, take the one
  // whose start is closest to the random start.
  std::optional<std::pair<std::size_t, std::size_t>> best;
  std::size_t best_dist = 0;
  std::size_t e = 0;
  for (std::size_t s = 0; s < n; ++s) {
    e = std::max(e, s);
    while (e < n && span_len(s, e) < min_tokens) ++e;
    if (span_len(s, e) < min_tokens) break;  // no later start can reach the minimum either
    if (span_len(s, e) > max_tokens) continue;
    const std::size_t dist = s > random_start ? s - random_start : random_start - s;
    if (!best || dist < best_dist) {
      best = {s, e};
      best_dist = dist;
    }
  }
  if (!best) {
    throw ValidationError("select_subpart: document " + id.hex() + " has no run of whole sentences between " +
                          std::to_string(min_tokens) + " and " + std::to_string(max_tokens) + " tokens");
  }
  return make(best->first, best->second);
}

Passage passage_for(const std::string& text, DocId id, std::uint64_t seed) {
  const auto ends = sentence_ends(text);
  if (text.size() <= kSubpartMax) {
    return {SubpartSpan{id, 0, ends.size(), 0, text.size()}, text};
  }
  std::vector<std::uint64_t> lens;
  std::size_t prev = 0;
  for (const auto end : ends) {
    lens.push_back(end - prev);
    prev = end;
  }
  const auto span = select_subpart(id, lens, seed);
  return {span, text.substr(span.token_start, span.token_length)};
}

std::uint64_t LongQASample::context_tokens() const {
  std::uint64_t n = 0;
  for (const auto& c : context) n += c.length;
  return n;
}

json LongQASample::to_json() const {
  json ctx = json::array();
  for (const auto& c : context) ctx.push_back({{"doc_id", c.doc_id.hex()}, {"start", c.start}, {"length", c.length}});
  json ids = json::array();
  for (const auto& d : source_doc_ids) ids.push_back(d.hex());
  return {{"kind", std::string(to_string(kind))},
          {"source_doc_ids", std::move(ids)},
          {"context", std::move(ctx)},
          {"context_tokens", context_tokens()},
          {"subpart", subpart.to_json()},
          {"qa_doc_id", qa_doc.hex()},
          {"question", question},
          {"answer", answer}};
}

InstructionSample LongQASample::to_instruction(const TokenSource& docs, const std::string& id) const {
  InstructionSample s;
  s.id = id;
  for (const auto& c : context) {
    s.spans.push_back(SampleSpan{SegmentRole::context, docs.read(c.doc_id, c.start, c.length), c.doc_id, c.start});
  }
  s.spans.push_back(SampleSpan{SegmentRole::question, tokenize("\n\nQuestion: " + question + "\nAnswer: "), qa_doc, 0});
  s.spans.push_back(SampleSpan{SegmentRole::answer, tokenize(answer), qa_doc, 0});
  return s;
}

namespace {

struct Prepared {
  DocId id;
  std::uint64_t retained = 0;
  Passage passage;
};

Prepared prepare_single(const CorpusStore& store, DocId id, std::uint64_t seed) {
  const auto len = store.entry(id).token_length;
  if (len < kMinDocTokens) {
    throw ValidationError("document " + id.hex() + " has " + std::to_string(len) + " tokens; long-context samples need at least " +
                          std::to_string(kMinDocTokens));
  }
  const auto retained = std::min(len, kMaxContextTokens);
  const auto text = detokenize(store.read_tokens(id, 0, retained));
  return {id, retained, passage_for(text, id, seed)};
}

LongQASample assemble_single(const Prepared& p, TeacherResponse qa) {
  LongQASample s;
  s.kind = SampleKind::single_doc;
  s.context.push_back({p.id, 0, p.retained});
  s.source_doc_ids.push_back(p.id);
  s.qa_doc = p.id;
  s.subpart = p.passage.span;
  s.question = std::move(qa.question);
  s.answer = std::move(qa.answer);
  return s;
}

TeacherRequest request_for(const Teacher& teacher, const std::string& passage) {
  return TeacherRequest{passage, teacher.prompt_template_id(), teacher.model()};
}

std::size_t chunk_size(const Options& opts) { return std::max<std::size_t>(16, opts.max_in_flight * 4); }

}  // namespace

LongQASample build_single_doc_sample(const CorpusStore& store, DocId id, Teacher& teacher, std::uint64_t seed) {
  const auto p = prepare_single(store, id, seed);
  return assemble_single(p, teacher.generate(request_for(teacher, p.passage.text)));
}

BuildResult build_single_doc_samples(const CorpusStore& store, std::span<const DocId> ids, Teacher& teacher,
                                     const Options& opts, std::size_t max_samples) {
  BuildResult out;
  std::size_t next = 0;
  while (next < ids.size() && (max_samples == 0 || out.samples.size() < max_samples)) {
    std::vector<Prepared> batch;
    while (next < ids.size() && batch.size() < chunk_size(opts)) {
      const DocId id = ids[next++];
      try {
        batch.push_back(prepare_single(store, id, opts.seed));
      } catch (const ValidationError& e) {
        out.skipped.push_back({id, e.what()});
      }
    }
    std::vector<TeacherRequest> reqs;
    for (const auto& p : batch) reqs.push_back(request_for(teacher, p.passage.text));
    auto results = generate_all(teacher, reqs, opts.max_in_flight);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (max_samples && out.samples.size() >= max_samples) break;
      if (!results[i].response) {
        out.skipped.push_back({batch[i].id, results[i].error});
        continue;
      }
      out.samples.push_back(assemble_single(batch[i], std::move(*results[i].response)));
    }
  }
  return out;
}

LongQASample build_concat_sample(std::span<const ConcatMember> members, std::uint64_t seed) {
  std::set<std::uint64_t> seen;
  std::uint64_t total = 0;
  std::size_t used = 0;
  for (; used < members.size() && total < kMaxContextTokens; ++used) {
    if (!seen.insert(members[used].doc_id.value).second) {
      throw ValidationError("concat sample: document " + members[used].doc_id.hex() + " appears twice");
    }
    total += members[used].token_length;
  }
  if (total < kMaxContextTokens) {
    throw ValidationError("concat sample: documents run out at " + std::to_string(total) + " of " +
                          std::to_string(kMaxContextTokens) + " tokens");
  }
  LongQASample s;
  s.kind = SampleKind::concat;
  for (std::size_t i = 0; i < used; ++i) {
    s.context.push_back({members[i].doc_id, 0, members[i].token_length});
    s.source_doc_ids.push_back(members[i].doc_id);
  }
  Rng rng = Rng::keyed({seed, members[0].doc_id.value, used, 0x636f6e636174ULL});
  const auto& chosen = members[rng.below(used)];
  s.qa_doc = chosen.doc_id;
  s.subpart = chosen.subpart;
  s.question = chosen.qa.question;
  s.answer = chosen.qa.answer;
  return s;
}

BuildResult build_concat_samples(const CorpusStore& store, std::span<const DocId> ids, Teacher& teacher,
                                 const Options& opts, std::size_t max_samples) {
  BuildResult out;
  std::vector<ConcatMember> pending;
  std::uint64_t pending_tokens = 0;
  std::size_t next = 0;
  while (next < ids.size() && (max_samples == 0 || out.samples.size() < max_samples)) {
    std::vector<ConcatMember> batch;
    std::vector<TeacherRequest> reqs;
    while (next < ids.size() && batch.size() < chunk_size(opts)) {
      const DocId id = ids[next++];
      try {
        const auto len = store.entry(id).token_length;
        auto passage = passage_for(store.read_text(id), id, opts.seed);
        reqs.push_back(request_for(teacher, passage.text));
        batch.push_back(ConcatMember{id, len, passage.span, {}});
      } catch (const ValidationError& e) {
        out.skipped.push_back({id, e.what()});
      }
    }
    auto results = generate_all(teacher, reqs, opts.max_in_flight);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (max_samples && out.samples.size() >= max_samples) break;
      if (!results[i].response) {
        out.skipped.push_back({batch[i].doc_id, results[i].error});
        continue;
      }
      batch[i].qa = std::move(*results[i].response);
      pending_tokens += batch[i].token_length;
      pending.push_back(std::move(batch[i]));
      if (pending_tokens >= kMaxContextTokens) {
        out.samples.push_back(build_concat_sample(pending, opts.seed));
        pending.clear();
        pending_tokens = 0;
      }
    }
  }
  for (const auto& m : pending) out.skipped.push_back({m.doc_id, "not enough remaining documents to reach 128K"});
  return out;
}

void write_jsonl(const std::filesystem::path& path, std::span<const LongQASample> samples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& s : samples) out << s.to_json().dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace dataforge::longqa
