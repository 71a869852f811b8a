#include <doctest.h>

#include <fstream>

#include "dataforge/corpus_store.hpp"
#include "dataforge/error.hpp"
#include "dataforge/rng.hpp"
#include "synthetic.hpp"

using namespace dataforge;

namespace {

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << "\n";
}

}  // namespace

TEST_CASE("byte tokenizer") {
  CHECK(tokenize("").empty());
  CHECK(tokenize("AB") == std::vector<TokenId>{65, 66});
  CHECK(tokenize("\xC3\xA9") == std::vector<TokenId>{195, 169});  // é
  CHECK(detokenize(tokenize("héllo")) == "héllo");
  const std::vector<TokenId> bad{65, kPadToken};
  CHECK_THROWS_AS(detokenize(bad), ValidationError);
}

TEST_CASE("doc ids hash source, a zero byte, then the content") {
  // FNV-1a over "books\0AB", computed byte by byte
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : std::string("books") + std::string(1, '\0') + "AB") {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  CHECK(make_doc_id("books", std::string_view("AB")).value == h);
  CHECK(make_doc_id("books", std::string_view("AB")) != make_doc_id("code_repos", std::string_view("AB")));
}

TEST_CASE("ingest text lines, then re-ingest is idempotent") {
  dftest::ScratchDir tmp("store-ingest");
  const auto input = tmp.path / "in.jsonl";
  write_lines(input, {R"({"text":"alpha beta"})", R"({"text":"gamma"})", R"({"text":"delta epsilon zeta"})"});
  auto store = CorpusStore::open_or_create(tmp.path / "store");
  const auto r1 = store.ingest_jsonl(input, "books");
  CHECK(r1.ingested == 3);
  CHECK(r1.duplicates == 0);
  const auto r2 = store.ingest_jsonl(input, "books");
  CHECK(r2.ingested == 0);
  CHECK(r2.duplicates == 3);
  CHECK(store.entries().size() == 3);
  CHECK(store.total_tokens() == 10 + 5 + 18);

  const auto id = make_doc_id("books", std::string_view("gamma"));
  const auto doc = store.get_document(id);
  CHECK(doc.tokens == tokenize("gamma"));
  CHECK(doc.source == "books");
  CHECK_THROWS_AS(store.get_document(DocId{12345}), NotFoundError);
  store.verify();

  // reopen from disk
  store.flush();
  auto again = CorpusStore::open(tmp.path / "store");
  CHECK(again.entries().size() == 3);
  CHECK(again.read_text(id) == "gamma");
  CHECK(again.meta().tokenizer_id == "byte-v1");
  CHECK(again.meta().vocab_size == 259);
}

TEST_CASE("pre-tokenized lines and their errors") {
  dftest::ScratchDir tmp("store-tokens");
  auto store = CorpusStore::open_or_create(tmp.path / "store");
  write_lines(tmp.path / "ok.jsonl", {R"({"tokens":[0,1,2]})"});
  CHECK(store.ingest_jsonl(tmp.path / "ok.jsonl", "code_repos").ingested == 1);
  CHECK(store.entries().at(0).token_length == 3);

  write_lines(tmp.path / "vocab.jsonl", {R"({"tokens":[1,2]})", R"({"tokens":[5,259]})"});
  try {
    store.ingest_jsonl(tmp.path / "vocab.jsonl", "code_repos");
    FAIL("expected a vocab error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(std::string(e.what()).find("259") != std::string::npos);
  }
  CHECK(store.entries().size() == 1);  // nothing from the bad file was kept

  write_lines(tmp.path / "broken.jsonl", {R"({"text":"fine"})", R"({"text": "unterminated)"});
  try {
    store.ingest_jsonl(tmp.path / "broken.jsonl", "code_repos");
    FAIL("expected a parse error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(store.ingest_jsonl(tmp.path / "missing.jsonl", "x"), IoError);
}

TEST_CASE("instruction documents record where the answer starts") {
  dftest::ScratchDir tmp("store-instr");
  auto store = CorpusStore::open_or_create(tmp.path / "store");
  CHECK(store.append_instruction("ultrachat", "Hi?", "Hello."));
  const auto& e = store.entries().at(0);
  CHECK(e.answer_offset == 3u);
  CHECK(store.read_text(e.id) == "Hi?Hello.");
}

TEST_CASE("1000 documents: index lengths agree with the blob") {
  dftest::ScratchDir tmp("store-1000");
  auto store = CorpusStore::open_or_create(tmp.path / "store");
  dftest::populate(store, {{"fineweb", 1000, 1, 300}}, 11);
  CHECK(store.entries().size() == 1000);
  store.verify();
  Rng rng(5);
  std::uint64_t sum = 0;
  for (const auto& e : store.entries()) sum += e.token_length;
  CHECK(sum == store.total_tokens());
  CHECK(std::filesystem::file_size(tmp.path / "store" / "tokens.bin") == 4 * sum);
  for (int i = 0; i < 50; ++i) {
    const auto& e = store.entries()[rng.below(1000)];
    CHECK(store.get_document(e.id).tokens.size() == e.token_length);
  }
}

TEST_CASE("stage tags persist") {
  dftest::ScratchDir tmp("store-tags");
  auto store = CorpusStore::open_or_create(tmp.path / "store");
  store.append_text("a", "one");
  store.append_text("a", "two");
  const auto id = store.entries()[1].id;
  store.set_stage_tags({{id.value, StageTag::stage2}});
  store.flush();
  auto again = CorpusStore::open(tmp.path / "store");
  CHECK(again.entry(id).stage == StageTag::stage2);
  CHECK(again.entries()[0].stage == StageTag::unassigned);
}
