#include "dataforge/mixture.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>

#include "dataforge/error.hpp"
#include "dataforge/hash.hpp"
#include "dataforge/packer.hpp"
#include "dataforge/rng.hpp"

namespace dataforge {

using json = nlohmann::json;
using mathgen::BigInt;

std::string_view to_string(Bucket b) {
  switch (b) {
    case Bucket::short_ctx: return "short";
    case Bucket::long64k: return "long64k";
    case Bucket::long256k: return "long256k";
    case Bucket::sft_short: return "sft_short";
    case Bucket::sft_long: return "sft_long";
  }
  return "?";
}

Bucket parse_bucket(std::string_view s) {
  if (s == "short") return Bucket::short_ctx;
  if (s == "long64k") return Bucket::long64k;
  if (s == "long256k") return Bucket::long256k;
  if (s == "sft_short") return Bucket::sft_short;
  if (s == "sft_long") return Bucket::sft_long;
  throw ValidationError("unknown bucket '" + std::string(s) + "'");
}

bool is_short(Bucket b) { return b == Bucket::short_ctx || b == Bucket::sft_short; }

namespace {

Rational fraction_from_json(const json& j) {
  if (j.is_string()) return mathgen::parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_number()) {
    // shortest round-trip text, so 0.3 means 3/10
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, j.get<double>());
    if (ec != std::errc{}) throw ValidationError("bad fraction");
    std::string text(buf, end);
    if (text.find_first_of("eE") != std::string::npos) throw ValidationError("fraction '" + text + "': write it as n/d");
    return mathgen::parse_rational(text);
  }
  throw ValidationError("fraction must be a number or an \"n/d\" string");
}

longqa::SampleKind parse_sample_kind(std::string_view s) {
  if (s == "single_doc") return longqa::SampleKind::single_doc;
  if (s == "concat") return longqa::SampleKind::concat;
  throw ValidationError("unknown sample_kind '" + std::string(s) + "'");
}

std::uint64_t to_u64(const BigInt& v) { return static_cast<std::uint64_t>(v); }

}  // namespace

void MixtureSpec::validate() const {
  if (entries.empty()) throw ValidationError("mixture '" + name + "' has no entries");
  if (token_budget < 1) throw ValidationError("mixture '" + name + "': token_budget must be >= 1");
  if (seq_len < 1 || long64k_len < 1 || long256k_len < 1) throw ValidationError("mixture '" + name + "': lengths must be >= 1");
  Rational sum = 0;
  for (const auto& e : entries) {
    if (e.fraction < 0 || e.fraction > 1) {
      throw ValidationError("mixture '" + name + "': fraction of " + e.source + " is " +
                            mathgen::to_fraction_string(e.fraction) + ", outside [0, 1]");
    }
    sum += e.fraction;
  }
  if (sum != 1) {
    throw ValidationError("mixture '" + name + "': fractions sum to " + mathgen::to_display_string(sum) +
                          ", deficit " + mathgen::to_display_string(Rational(1) - sum));
  }
}

MixtureSpec MixtureSpec::from_json(const json& j) {
  try {
    MixtureSpec s;
    s.name = j.value("name", std::string("custom"));
    s.token_budget = j.at("token_budget").get<std::uint64_t>();
    s.seed = j.value("seed", std::uint64_t{0});
    s.seq_len = j.value("seq_len", s.seq_len);
    s.long64k_len = j.value("long64k_len", s.long64k_len);
    s.long256k_len = j.value("long256k_len", s.long256k_len);
    s.nest_long64k = j.value("nest_long64k", s.nest_long64k);
    s.step_tokens = j.value("step_tokens", s.step_tokens);
    for (const auto& e : j.at("entries")) {
      MixtureEntry me;
      me.source = e.at("source").get<std::string>();
      me.bucket = parse_bucket(e.at("bucket").get<std::string>());
      me.fraction = fraction_from_json(e.at("fraction"));
      if (e.contains("sample_kind")) me.sample_kind = parse_sample_kind(e["sample_kind"].get<std::string>());
      s.entries.push_back(std::move(me));
    }
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("mixture spec: ") + e.what());
  }
}

MixtureSpec MixtureSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

json MixtureSpec::to_json() const {
  json entries_j = json::array();
  for (const auto& e : entries) {
    json x = {{"source", e.source}, {"bucket", dataforge::to_string(e.bucket)},
              {"fraction", mathgen::to_fraction_string(e.fraction)}};
    if (e.bucket == Bucket::sft_long) x["sample_kind"] = longqa::to_string(e.sample_kind);
    entries_j.push_back(std::move(x));
  }
  return {{"name", name},           {"token_budget", token_budget}, {"seed", seed},
          {"seq_len", seq_len},     {"long64k_len", long64k_len},   {"long256k_len", long256k_len},
          {"nest_long64k", nest_long64k}, {"step_tokens", step_tokens}, {"entries", entries_j}};
}

namespace {

MixtureEntry E(std::string source, Bucket b, const char* frac,
               longqa::SampleKind kind = longqa::SampleKind::single_doc) {
  return MixtureEntry{std::move(source), b, mathgen::parse_rational(frac), kind};
}

}  // namespace

std::vector<std::string> builtin_spec_names() {
  return {"instella-long-stage1", "instella-long-stage2", "instella-long-sft"};
}

bool is_builtin_spec(std::string_view name) {
  const auto names = builtin_spec_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

MixtureSpec builtin_spec(std::string_view name) {
  MixtureSpec s;
  s.name = std::string(name);
  s.token_budget = 20'000'000'000ULL;
  using B = Bucket;
  if (name == "instella-long-stage1") {
    s.seq_len = 65536;
    s.step_tokens = 4ULL << 20;
    s.entries = {E("code_repos", B::long64k, "0.30"),   E("books", B::long64k, "0.30"),
                 E("textbooks", B::long64k, "0.03"),    E("fineweb_edu", B::short_ctx, "0.10"),
                 E("fineweb", B::short_ctx, "0.10"),    E("wikipedia", B::short_ctx, "0.05"),
                 E("openwebmath", B::short_ctx, "0.05"), E("stackexchange", B::short_ctx, "0.04"),
                 E("arxiv", B::short_ctx, "0.03")};
  } else if (name == "instella-long-stage2") {
    s.seq_len = 262144;
    s.step_tokens = 8ULL << 20;
    s.entries = {E("code_repos", B::long64k, "0.10"),   E("books", B::long64k, "0.15"),
                 E("code_repos", B::long256k, "0.20"),  E("books", B::long256k, "0.15"),
                 E("textbooks", B::long256k, "0.02"),   E("fineweb_edu", B::short_ctx, "0.10"),
                 E("fineweb", B::short_ctx, "0.10"),    E("wikipedia", B::short_ctx, "0.05"),
                 E("openwebmath", B::short_ctx, "0.05"), E("stackexchange", B::short_ctx, "0.04"),
                 E("arxiv", B::short_ctx, "0.04")};
  } else if (name == "instella-long-sft") {
    s.token_budget = 1'000'000'000ULL;
    s.seq_len = 262144;
    s.step_tokens = 4ULL << 20;
    s.entries = {E("ultrachat", B::sft_short, "0.25"),
                 E("openmathinstruct2", B::sft_short, "0.10"),
                 E("mmlu_aux", B::sft_short, "0.03"),
                 E("tulu3_if", B::sft_short, "0.02"),
                 E("books", B::sft_long, "0.44", longqa::SampleKind::single_doc),
                 E("dclm", B::sft_long, "0.10", longqa::SampleKind::concat),
                 E("arxiv", B::sft_long, "0.06", longqa::SampleKind::concat)};
  } else {
    std::string known;
    for (const auto& n : builtin_spec_names()) known += (known.empty() ? "" : ", ") + n;
    throw ValidationError("unknown recipe '" + std::string(name) + "' (known: " + known + ")");
  }
  return s;
}

std::vector<std::uint64_t> plan_mixture(const MixtureSpec& spec) {
  spec.validate();
  const std::size_t n = spec.entries.size();
  std::vector<std::uint64_t> targets(n);
  std::vector<Rational> rem(n);
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Rational raw = spec.entries[i].fraction * spec.token_budget;
    const BigInt fl = numerator(raw) / denominator(raw);  // non-negative, so truncation is floor
    targets[i] = to_u64(fl);
    rem[i] = raw - Rational(fl);
    assigned += targets[i];
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::uint64_t k = 0; assigned + k < spec.token_budget; ++k) ++targets[order[k]];
  return targets;
}

StageSplit split_stages(std::span<const DocId> doc_ids, const Rational& stage2_fraction, std::uint64_t seed) {
  if (stage2_fraction < 0 || stage2_fraction > 1) {
    throw ValidationError("stage2 fraction " + mathgen::to_fraction_string(stage2_fraction) + " outside [0, 1]");
  }
  // stage 2 iff hash < fraction * 2^64
  const BigInt scaled = (numerator(stage2_fraction) << 64) / denominator(stage2_fraction);
  const auto threshold = static_cast<unsigned __int128>(scaled >> 64) << 64 |
                         static_cast<unsigned __int128>(static_cast<std::uint64_t>(scaled & BigInt(~0ULL)));
  StageSplit out;
  for (const DocId id : doc_ids) {
    const std::uint64_t h = hash_combine(hash_combine(seed, 0x7374616765ULL), id.value);
    (static_cast<unsigned __int128>(h) < threshold ? out.stage2 : out.stage1).push_back(id);
  }
  return out;
}

double MixturePlan::realized_fraction(std::size_t i) const {
  return static_cast<double>(entries.at(i).realized_tokens) / static_cast<double>(token_budget);
}

double MixturePlan::short_ratio() const {
  const auto total = realized_tokens();
  return total ? static_cast<double>(short_tokens) / static_cast<double>(total) : 0.0;
}

namespace {

std::string doc_digest(std::vector<DocId> ids) {
  std::sort(ids.begin(), ids.end());
  Fnv1a64 h;
  for (const auto id : ids) h.update_u64le(id.value);
  return to_hex(h.digest());
}

}  // namespace

json MixturePlan::to_json() const {
  json es = json::array();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    es.push_back({{"source", e.source},
                  {"bucket", dataforge::to_string(e.bucket)},
                  {"fraction", mathgen::to_fraction_string(e.fraction)},
                  {"seq_len", e.seq_len},
                  {"target_tokens", e.target_tokens},
                  {"realized_tokens", e.realized_tokens},
                  {"realized_fraction", realized_fraction(i)},
                  {"sequence_count", e.sequence_count},
                  {"docs_used", e.doc_ids.size()},
                  {"doc_digest", doc_digest(e.doc_ids)},
                  {"stats", e.stats}});
  }
  const auto total = realized_tokens();
  return {{"name", name},
          {"token_budget", token_budget},
          {"realized_tokens", total},
          {"short_tokens", short_tokens},
          {"long_tokens", long_tokens},
          {"short_long_ratio",
           {{"short", short_ratio()},
            {"long", total ? 1.0 - short_ratio() : 0.0},
            {"exact", std::to_string(short_tokens) + ":" + std::to_string(long_tokens)}}},
          {"entries", es}};
}

void write_plan(const std::filesystem::path& dir, const MixturePlan& plan) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "plan.json", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "plan.json").string());
    out << plan.to_json().dump(2) << '\n';
  }
  std::ofstream out(dir / "provenance.jsonl", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "provenance.jsonl").string());
  for (std::size_t i = 0; i < plan.entries.size(); ++i) {
    const auto& e = plan.entries[i];
    json ids = json::array();
    for (const auto id : e.doc_ids) ids.push_back(id.hex());
    out << json{{"entry", i}, {"source", e.source}, {"bucket", to_string(e.bucket)}, {"doc_ids", ids}}.dump()
        << '\n';
  }
  if (!out) throw IoError("write failed: " + (dir / "provenance.jsonl").string());
}

// ---- realization -----------------------------------------------------------

namespace {

struct Realizer {
  const MixtureSpec& spec;
  const CorpusStore& store;
  const RealizeOptions& opts;
  PackedDatasetWriter& writer;
  StoreTokenSource docs;
  Teacher& teacher;
  std::unordered_set<std::uint64_t> used;
  std::vector<longqa::LongQASample> qa_samples;

  Realizer(const MixtureSpec& s, const CorpusStore& st, const RealizeOptions& o, PackedDatasetWriter& w, Teacher& t)
      : spec(s), store(st), opts(o), writer(w), docs(st), teacher(t) {}

  std::uint64_t entry_seed(std::size_t i, const MixtureEntry& e) const {
    return hash_combine(hash_combine(spec.seed, i), fnv1a64(e.source + ":" + std::string(to_string(e.bucket))));
  }

  std::vector<DocId> candidates(std::size_t i, const MixtureEntry& e) const {
    std::vector<DocId> out;
    for (const auto id : store.ids_for_source(e.source)) {
      if (used.count(id.value)) continue;
      if (opts.allowed_docs && !opts.allowed_docs->count(id.value)) continue;
      out.push_back(id);
    }
    Rng::keyed({entry_seed(i, e), 0x6d6978ULL}).shuffle(out);
    return out;
  }

  // Whether long64k windows are nested k-at-a-time into seq_len sequences.
  bool nested(const MixtureEntry& e) const {
    return e.bucket == Bucket::long64k && spec.nest_long64k && spec.seq_len > spec.long64k_len &&
           spec.seq_len % spec.long64k_len == 0;
  }

  std::uint64_t bucket_len(const MixtureEntry& e) const {
    switch (e.bucket) {
      case Bucket::long64k: return nested(e) ? spec.seq_len : spec.long64k_len;
      case Bucket::long256k: return spec.long256k_len;
      default: return spec.seq_len;
    }
  }

  void emit(EntryRealization& r, std::size_t i, const PackedSequence& seq) {
    writer.append(seq, SequenceTags{r.source, std::to_string(i) + ":" + r.source + ":" + std::string(to_string(r.bucket))});
    ++r.sequence_count;
    r.realized_tokens += seq.length;
    for (const auto& seg : seq.segments) {
      if (seg.role == SegmentRole::pad) continue;
      if (used.insert(seg.doc_id.value).second) r.doc_ids.push_back(seg.doc_id);
    }
  }

  void realize_short(EntryRealization& r, std::size_t i, const MixtureEntry& e, std::size_t n) {
    const auto ids = candidates(i, e);
    ShortPackOptions po;
    po.seed = entry_seed(i, e);
    po.shuffle = false;
    po.max_sequences = n;
    auto res = pack_short(docs, ids, r.seq_len, po);
    for (const auto& s : res.sequences) emit(r, i, s);
    r.stats = {{"candidate_docs", ids.size()},
               {"docs_consumed", res.stats.docs_consumed},
               {"tokens_consumed", res.stats.tokens_consumed},
               {"tokens_discarded", res.stats.tokens_discarded}};
  }

  void realize_long(EntryRealization& r, std::size_t i, const MixtureEntry& e, std::size_t n) {
    const auto ids = candidates(i, e);
    LongPackOptions lo;
    lo.seed = entry_seed(i, e);
    lo.superlong_factor = opts.superlong_factor;
    lo.max_segments = opts.max_segments;
    if (!nested(e)) {
      lo.max_sequences = n;
      auto res = make_long_sequences(docs, ids, r.seq_len, lo);
      for (const auto& s : res.sequences) emit(r, i, s);
      r.stats = {{"candidate_docs", ids.size()},
                 {"filtered_docs", res.stats.filtered_docs},
                 {"docs_used", res.stats.docs_used},
                 {"superlong_docs", res.stats.superlong_docs}};
      return;
    }
    // Nested: each output sequence holds k windows of long64k_len from k different documents.
    const std::uint64_t sub = spec.long64k_len;
    const std::uint64_t k = r.seq_len / sub;
    struct Window {
      DocId id;
      std::uint64_t offset;
    };
    std::vector<std::vector<Window>> open;
    std::size_t done = 0, filtered = 0, superlong = 0;
    std::uint64_t windows = 0;
    for (const DocId id : ids) {
      if (done >= n) break;
      const auto len = store.entry(id).token_length;
      const auto offsets = long_window_offsets(id, len, sub, lo);
      if (offsets.empty()) {
        ++filtered;
        continue;
      }
      if (len / sub >= lo.superlong_factor) ++superlong;
      for (const auto off : offsets) {
        auto it = std::find_if(open.begin(), open.end(), [&](const std::vector<Window>& g) {
          return std::none_of(g.begin(), g.end(), [&](const Window& w) { return w.id == id; });
        });
        if (it == open.end()) {
          open.emplace_back();
          it = std::prev(open.end());
        }
        it->push_back({id, off});
        ++windows;
        if (it->size() == k) {
          std::vector<PackedSequence> parts;
          for (const auto& w : *it) {
            PackedSequence p;
            p.length = sub;
            p.tokens = store.read_tokens(w.id, w.offset, sub);
            p.segments.push_back(SegmentRef{w.id, w.offset, 0, sub, true, SegmentRole::pretrain, 0});
            parts.push_back(std::move(p));
          }
          emit(r, i, pack_grouped(parts, r.seq_len));
          open.erase(it);
          if (++done >= n) break;
        }
      }
    }
    std::uint64_t unplaced = 0;
    for (const auto& g : open) unplaced += g.size();
    r.stats = {{"candidate_docs", ids.size()}, {"filtered_docs", filtered},   {"superlong_docs", superlong},
               {"windows", windows},           {"windows_per_sequence", k}, {"unplaced_windows", unplaced}};
  }

  // Greedily takes samples from `next` until n sequences are full, then packs them.
  // Returns the ids of the samples that were packed.
  std::vector<std::string> fill_sft(EntryRealization& r, std::size_t i, std::size_t n,
                                    const std::function<std::optional<InstructionSample>()>& next, std::size_t& oversize) {
    std::vector<InstructionSample> taken;
    std::size_t closed = 0;
    std::uint64_t fill = 0;
    while (closed < n) {
      auto s = next();
      if (!s) break;
      const auto len = s->token_length();
      if (len == 0) continue;
      if (len > r.seq_len) {
        ++oversize;
        continue;
      }
      if (fill + len > r.seq_len) {
        ++closed;
        fill = 0;
        if (closed >= n) break;
      }
      fill += len;
      taken.push_back(std::move(*s));
    }
    std::vector<std::string> ids;
    for (const auto& s : taken) ids.push_back(s.id);
    SftPackOptions so;
    so.answer_only_loss = opts.answer_only_loss;
    for (const auto& seq : pack_sft(taken, r.seq_len, so)) {
      emit(r, i, seq);
      for (const auto& seg : seq.segments)
        if (seg.role == SegmentRole::pad) r.stats["pad_tokens"] = r.stats.value("pad_tokens", std::uint64_t{0}) + seg.length;
    }
    r.stats["samples"] = taken.size();
    return ids;
  }

  void realize_sft_short(EntryRealization& r, std::size_t i, const MixtureEntry& e, std::size_t n) {
    const auto ids = candidates(i, e);
    std::size_t pos = 0, oversize = 0;
    auto next = [&]() -> std::optional<InstructionSample> {
      if (pos >= ids.size()) return std::nullopt;
      const DocId id = ids[pos++];
      const auto& ent = store.entry(id);
      InstructionSample s;
      s.id = id.hex();
      const auto split = std::min(ent.answer_offset.value_or(0), ent.token_length);
      if (split > 0) s.spans.push_back({SegmentRole::question, store.read_tokens(id, 0, split), id, 0});
      s.spans.push_back({SegmentRole::answer, store.read_tokens(id, split, ent.token_length - split), id, split});
      return s;
    };
    r.stats = {{"candidate_docs", ids.size()}, {"pad_tokens", 0}};
    fill_sft(r, i, n, next, oversize);
    r.stats["oversize_samples"] = oversize;
  }

  void realize_sft_long(EntryRealization& r, std::size_t i, const MixtureEntry& e, std::size_t n) {
    auto ids = candidates(i, e);
    longqa::Options lo;
    lo.seed = entry_seed(i, e);
    lo.max_in_flight = opts.max_in_flight;
    std::vector<longqa::LongQASample> buffer;
    std::size_t buf_pos = 0, id_pos = 0, oversize = 0, skipped = 0;
    bool concat_done = false;

    if (e.sample_kind == longqa::SampleKind::single_doc) {
      std::erase_if(ids, [&](DocId id) { return store.entry(id).token_length < longqa::kMinDocTokens; });
    }
    auto refill = [&] {
      buffer.clear();
      buf_pos = 0;
      if (e.sample_kind == longqa::SampleKind::single_doc) {
        const std::size_t take = std::min<std::size_t>(8, ids.size() - id_pos);
        auto res = longqa::build_single_doc_samples(store, std::span(ids).subspan(id_pos, take), teacher, lo);
        id_pos += take;
        skipped += res.skipped.size();
        buffer = std::move(res.samples);
      } else if (!concat_done) {
        // every concat sample is at least 128K, so this bounds what a sequence can hold
        const std::size_t cap = n * std::max<std::uint64_t>(1, r.seq_len / longqa::kMaxContextTokens);
        auto res = longqa::build_concat_samples(store, ids, teacher, lo, cap);
        concat_done = true;
        skipped += res.skipped.size();
        buffer = std::move(res.samples);
      }
    };
    std::vector<longqa::LongQASample> pulled;
    auto next = [&]() -> std::optional<InstructionSample> {
      while (buf_pos >= buffer.size()) {
        if (e.sample_kind == longqa::SampleKind::single_doc ? id_pos >= ids.size() : concat_done) return std::nullopt;
        refill();
      }
      auto& s = buffer[buf_pos++];
      auto inst = s.to_instruction(docs, std::to_string(pulled.size()));
      pulled.push_back(s);
      return inst;
    };
    r.stats = {{"candidate_docs", ids.size()}, {"pad_tokens", 0}, {"sample_kind", longqa::to_string(e.sample_kind)}};
    for (const auto& id : fill_sft(r, i, n, next, oversize)) {
      const auto& s = pulled[std::stoul(id)];
      qa_samples.push_back(s);
      for (const auto d : s.source_doc_ids)
        if (used.insert(d.value).second) r.doc_ids.push_back(d);
    }
    r.stats["oversize_samples"] = oversize;
    r.stats["skipped_docs"] = skipped;
  }
};

}  // namespace

RealizeOutput realize_mixture(const MixtureSpec& spec, const CorpusStore& store, const RealizeOptions& opts,
                              PackedDatasetWriter& writer) {
  const auto targets = plan_mixture(spec);

  std::vector<std::string> missing;
  const auto present = store.sources();
  for (const auto& e : spec.entries) {
    if (std::find(present.begin(), present.end(), e.source) == present.end() &&
        std::find(missing.begin(), missing.end(), e.source) == missing.end()) {
      missing.push_back(e.source);
    }
  }
  if (!missing.empty()) {
    std::string msg = "store lacks source labels:";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }

  StubTeacher stub;
  Realizer rz(spec, store, opts, writer, opts.teacher ? *opts.teacher : static_cast<Teacher&>(stub));

  RealizeOutput out;
  auto& plan = out.plan;
  plan.name = spec.name;
  plan.token_budget = spec.token_budget;

  // running target/realized totals per class (0 = short, 1 = long)
  std::uint64_t cum_target[2] = {0, 0};
  std::uint64_t cum_real[2] = {0, 0};
  std::vector<std::string> shortfalls;

  for (std::size_t i = 0; i < spec.entries.size(); ++i) {
    const auto& e = spec.entries[i];
    EntryRealization r;
    r.source = e.source;
    r.bucket = e.bucket;
    r.fraction = e.fraction;
    r.seq_len = rz.bucket_len(e);
    r.target_tokens = targets[i];

    const int c = is_short(e.bucket) ? 0 : 1;
    std::size_t n = 0;
    if (r.target_tokens > 0) {
      const auto want = static_cast<std::int64_t>(cum_target[c] + r.target_tokens) - static_cast<std::int64_t>(cum_real[c]);
      if (want > 0) n = static_cast<std::size_t>((static_cast<std::uint64_t>(want) + r.seq_len / 2) / r.seq_len);
    }
    cum_target[c] += r.target_tokens;

    if (n > 0) {
      switch (e.bucket) {
        case Bucket::short_ctx: rz.realize_short(r, i, e, n); break;
        case Bucket::long64k:
        case Bucket::long256k: rz.realize_long(r, i, e, n); break;
        case Bucket::sft_short: rz.realize_sft_short(r, i, e, n); break;
        case Bucket::sft_long: rz.realize_sft_long(r, i, e, n); break;
      }
    }
    r.stats["planned_sequences"] = n;
    if (r.sequence_count < n) {
      shortfalls.push_back(e.source + " (" + std::string(to_string(e.bucket)) + "): " +
                           std::to_string(n - r.sequence_count) + " of " + std::to_string(n) + " sequences, " +
                           std::to_string((n - r.sequence_count) * r.seq_len) + " tokens short");
    }
    cum_real[c] += r.realized_tokens;
    (c == 0 ? plan.short_tokens : plan.long_tokens) += r.realized_tokens;
    plan.entries.push_back(std::move(r));
  }

  if (!shortfalls.empty()) {
    std::string msg = "mixture '" + spec.name + "' ran out of documents:";
    for (const auto& s : shortfalls) msg += "\n  " + s;
    throw ValidationError(msg);
  }
  out.longqa_samples = std::move(rz.qa_samples);
  return out;
}

}  // namespace dataforge
