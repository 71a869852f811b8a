#include "dataforge/corpus_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "dataforge/error.hpp"
#include "dataforge/hash.hpp"

namespace dataforge {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string DocId::hex() const { return to_hex(value); }
DocId DocId::parse(std::string_view hex) { return DocId{from_hex(hex)}; }

std::string_view to_string(StageTag tag) {
  switch (tag) {
    case StageTag::stage1: return "stage1";
    case StageTag::stage2: return "stage2";
    case StageTag::unassigned: break;
  }
  return "unassigned";
}

StageTag parse_stage_tag(std::string_view s) {
  if (s == "unassigned") return StageTag::unassigned;
  if (s == "stage1") return StageTag::stage1;
  if (s == "stage2") return StageTag::stage2;
  throw ValidationError("unknown stage tag '" + std::string(s) + "'");
}

std::vector<TokenId> tokenize(std::string_view text) {
  std::vector<TokenId> out;
  out.reserve(text.size());
  for (char c : text) out.push_back(static_cast<unsigned char>(c));
  return out;
}

std::string detokenize(std::span<const TokenId> tokens) {
  std::string out;
  out.reserve(tokens.size());
  for (TokenId t : tokens) {
    if (t > 255) throw ValidationError("token " + std::to_string(t) + " is not a byte token");
    out.push_back(static_cast<char>(t));
  }
  return out;
}

DocId make_doc_id(std::string_view source, std::string_view content_bytes) {
  return DocId{Fnv1a64{}.update(source).update_byte(0).update(content_bytes).digest()};
}

DocId make_doc_id(std::string_view source, std::span<const TokenId> tokens) {
  Fnv1a64 h;
  h.update(source).update_byte(0);
  for (TokenId t : tokens) h.update_u32le(t);
  return DocId{h.digest()};
}

namespace {

constexpr const char* kBlobFile = "tokens.bin";
constexpr const char* kIndexFile = "index.jsonl";
constexpr const char* kMetaFile = "meta.json";

void write_meta(const fs::path& dir, const StoreMeta& meta) {
  json j = {{"tokenizer_id", meta.tokenizer_id},
            {"vocab_size", meta.vocab_size},
            {"format_version", meta.format_version}};
  std::ofstream out(dir / kMetaFile);
  if (!out) throw IoError("cannot write " + (dir / kMetaFile).string());
  out << j.dump(2) << '\n';
}

StoreMeta read_meta(const fs::path& dir) {
  std::ifstream in(dir / kMetaFile);
  if (!in) throw IoError("cannot read " + (dir / kMetaFile).string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("meta.json: " + std::string(e.what()));
  }
  StoreMeta m;
  m.tokenizer_id = j.at("tokenizer_id").get<std::string>();
  m.vocab_size = j.at("vocab_size").get<std::uint32_t>();
  m.format_version = j.at("format_version").get<int>();
  if (m.format_version != 1) throw ValidationError("unsupported store format_version " + std::to_string(m.format_version));
  return m;
}

void write_u32le(std::ostream& out, std::span<const TokenId> tokens) {
  std::vector<char> buf(tokens.size() * 4);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const TokenId t = tokens[i];
    buf[4 * i + 0] = static_cast<char>(t & 0xff);
    buf[4 * i + 1] = static_cast<char>((t >> 8) & 0xff);
    buf[4 * i + 2] = static_cast<char>((t >> 16) & 0xff);
    buf[4 * i + 3] = static_cast<char>((t >> 24) & 0xff);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

}  // namespace

CorpusStore::CorpusStore(CorpusStore&& o) noexcept
    : dir_(std::move(o.dir_)),
      meta_(std::move(o.meta_)),
      entries_(std::move(o.entries_)),
      by_id_(std::move(o.by_id_)),
      total_tokens_(o.total_tokens_),
      blob_out_(std::move(o.blob_out_)),
      index_out_(std::move(o.index_out_)),
      read_fd_(std::exchange(o.read_fd_, -1)) {}

CorpusStore& CorpusStore::operator=(CorpusStore&& o) noexcept {
  if (this != &o) {
    if (read_fd_ >= 0) ::close(read_fd_);
    dir_ = std::move(o.dir_);
    meta_ = std::move(o.meta_);
    entries_ = std::move(o.entries_);
    by_id_ = std::move(o.by_id_);
    total_tokens_ = o.total_tokens_;
    blob_out_ = std::move(o.blob_out_);
    index_out_ = std::move(o.index_out_);
    read_fd_ = std::exchange(o.read_fd_, -1);
  }
  return *this;
}

CorpusStore::~CorpusStore() {
  if (blob_out_.is_open()) blob_out_.flush();
  if (index_out_.is_open()) index_out_.flush();
  if (read_fd_ >= 0) ::close(read_fd_);
}

CorpusStore CorpusStore::open_or_create(const fs::path& dir, const StoreMeta& meta) {
  if (fs::exists(dir / kMetaFile)) {
    CorpusStore s = open(dir);
    if (s.meta_.tokenizer_id != meta.tokenizer_id || s.meta_.vocab_size != meta.vocab_size) {
      throw ValidationError("store " + dir.string() + " uses tokenizer " + s.meta_.tokenizer_id + " (vocab " +
                            std::to_string(s.meta_.vocab_size) + "), requested " + meta.tokenizer_id);
    }
    return s;
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_meta(dir, meta);
  std::ofstream(dir / kBlobFile, std::ios::binary | std::ios::app).close();
  std::ofstream(dir / kIndexFile, std::ios::app).close();
  return open(dir);
}

CorpusStore CorpusStore::open(const fs::path& dir) {
  CorpusStore s;
  s.dir_ = dir;
  s.meta_ = read_meta(dir);
  s.load();
  return s;
}

void CorpusStore::load() {
  std::ifstream in(dir_ / kIndexFile);
  if (!in) throw IoError("cannot read " + (dir_ / kIndexFile).string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    StoreIndexEntry e;
    try {
      const json j = json::parse(line);
      e.id = DocId::parse(j.at("doc_id").get<std::string>());
      e.byte_offset = j.at("offset").get<std::uint64_t>();
      e.token_length = j.at("length").get<std::uint64_t>();
      e.source = j.at("source").get<std::string>();
      e.stage = parse_stage_tag(j.at("stage_tag").get<std::string>());
      if (j.contains("answer_offset")) e.answer_offset = j.at("answer_offset").get<std::uint64_t>();
    } catch (const json::exception& ex) {
      throw ValidationError("index.jsonl line " + std::to_string(lineno) + ": " + ex.what());
    } catch (const ValidationError& ex) {
      throw ValidationError("index.jsonl line " + std::to_string(lineno) + ": " + ex.what());
    }
    by_id_.emplace(e.id.value, entries_.size());
    total_tokens_ += e.token_length;
    entries_.push_back(std::move(e));
  }
}

void CorpusStore::write_index_line(std::ostream& out, const StoreIndexEntry& e) const {
  json j = {{"doc_id", e.id.hex()},
            {"offset", e.byte_offset},
            {"length", e.token_length},
            {"source", e.source},
            {"stage_tag", std::string(to_string(e.stage))}};
  if (e.answer_offset) j["answer_offset"] = *e.answer_offset;
  out << j.dump() << '\n';
}

bool CorpusStore::append(const std::string& source, std::span<const TokenId> tokens, DocId id,
                         std::optional<std::uint64_t> answer_offset) {
  if (tokens.empty()) throw ValidationError("document " + id.hex() + " has no tokens");
  if (by_id_.contains(id.value)) return false;
  for (TokenId t : tokens) {
    if (t >= meta_.vocab_size) {
      throw ValidationError("document " + id.hex() + ": token " + std::to_string(t) + " exceeds vocab_size " +
                            std::to_string(meta_.vocab_size));
    }
  }
  if (!blob_out_.is_open()) {
    blob_out_.open(dir_ / kBlobFile, std::ios::binary | std::ios::app);
    index_out_.open(dir_ / kIndexFile, std::ios::app);
    if (!blob_out_ || !index_out_) throw IoError("cannot open store files in " + dir_.string());
  }
  StoreIndexEntry e;
  e.id = id;
  e.byte_offset = total_tokens_ * 4;
  e.token_length = tokens.size();
  e.source = source;
  e.answer_offset = answer_offset;
  write_u32le(blob_out_, tokens);
  write_index_line(index_out_, e);
  if (!blob_out_ || !index_out_) throw IoError("write failed in " + dir_.string());
  by_id_.emplace(id.value, entries_.size());
  total_tokens_ += e.token_length;
  entries_.push_back(std::move(e));
  return true;
}

bool CorpusStore::append_text(const std::string& source, std::string_view text) {
  const auto tokens = tokenize(text);
  return append(source, tokens, make_doc_id(source, text));
}

bool CorpusStore::append_instruction(const std::string& source, std::string_view prompt, std::string_view response) {
  std::string content(prompt);
  content.push_back('\0');
  content.append(response);
  auto tokens = tokenize(prompt);
  const auto split = tokens.size();
  const auto resp = tokenize(response);
  tokens.insert(tokens.end(), resp.begin(), resp.end());
  return append(source, tokens, make_doc_id(source, content), split);
}

IngestResult CorpusStore::ingest_jsonl(const fs::path& path, const std::string& source) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  struct Pending {
    DocId id;
    std::vector<TokenId> tokens;
    std::optional<std::uint64_t> answer_offset;
  };
  std::vector<Pending> pending;
  IngestResult result;

  const bool byte_tok = meta_.tokenizer_id == kByteTokenizer;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + " line " + std::to_string(lineno) + ": malformed JSON: " + e.what());
    }
    const auto where = [&] { return path.string() + " line " + std::to_string(lineno); };
    if (!j.is_object()) throw ValidationError(where() + ": expected a JSON object");
    Pending p;
    try {
      if (j.contains("tokens")) {
        p.tokens = j.at("tokens").get<std::vector<TokenId>>();
        p.id = make_doc_id(source, p.tokens);
        for (TokenId t : p.tokens) {
          if (t >= meta_.vocab_size) {
            throw ValidationError(where() + ": document " + p.id.hex() + " has token " + std::to_string(t) +
                                  " >= vocab_size " + std::to_string(meta_.vocab_size));
          }
        }
      } else if (j.contains("text")) {
        if (!byte_tok) throw ValidationError(where() + ": text input requires the byte tokenizer store");
        const auto text = j.at("text").get<std::string>();
        p.tokens = tokenize(text);
        p.id = make_doc_id(source, text);
      } else if (j.contains("prompt") && j.contains("response")) {
        if (!byte_tok) throw ValidationError(where() + ": text input requires the byte tokenizer store");
        const auto prompt = j.at("prompt").get<std::string>();
        const auto response = j.at("response").get<std::string>();
        std::string content = prompt;
        content.push_back('\0');
        content += response;
        p.tokens = tokenize(prompt);
        p.answer_offset = p.tokens.size();
        const auto r = tokenize(response);
        p.tokens.insert(p.tokens.end(), r.begin(), r.end());
        p.id = make_doc_id(source, content);
      } else {
        throw ValidationError(where() + ": expected field \"text\", \"tokens\", or \"prompt\"/\"response\"");
      }
    } catch (const json::exception& e) {
      throw ValidationError(where() + ": " + e.what());
    }
    if (p.tokens.empty()) {
      ++result.empty;
      continue;
    }
    pending.push_back(std::move(p));
  }

  for (const auto& p : pending) {
    if (append(source, p.tokens, p.id, p.answer_offset)) ++result.ingested;
    else ++result.duplicates;
  }
  flush();
  return result;
}

void CorpusStore::flush() {
  if (blob_out_.is_open()) blob_out_.flush();
  if (index_out_.is_open()) index_out_.flush();
}

void CorpusStore::ensure_reader() const {
  if (blob_out_.is_open()) const_cast<std::ofstream&>(blob_out_).flush();
  if (read_fd_ < 0) {
    read_fd_ = ::open((dir_ / kBlobFile).c_str(), O_RDONLY | O_CLOEXEC);
    if (read_fd_ < 0) throw IoError("cannot open " + (dir_ / kBlobFile).string() + ": " + std::strerror(errno));
  }
}

bool CorpusStore::contains(DocId id) const { return by_id_.contains(id.value); }

const StoreIndexEntry& CorpusStore::entry(DocId id) const {
  auto it = by_id_.find(id.value);
  if (it == by_id_.end()) throw NotFoundError("document " + id.hex() + " not found in store");
  return entries_[it->second];
}

std::vector<TokenId> CorpusStore::read_tokens(DocId id, std::uint64_t start, std::uint64_t length) const {
  const auto& e = entry(id);
  if (start > e.token_length || length > e.token_length - start) {
    throw ValidationError("range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                          ") outside document " + id.hex() + " of length " + std::to_string(e.token_length));
  }
  ensure_reader();
  std::vector<unsigned char> buf(length * 4);
  std::size_t done = 0;
  const auto base = static_cast<off_t>(e.byte_offset + start * 4);
  while (done < buf.size()) {
    const ssize_t n = ::pread(read_fd_, buf.data() + done, buf.size() - done, base + static_cast<off_t>(done));
    if (n <= 0) throw IoError("short read from " + (dir_ / kBlobFile).string() + " for document " + id.hex());
    done += static_cast<std::size_t>(n);
  }
  std::vector<TokenId> out(length);
  for (std::size_t i = 0; i < length; ++i) {
    out[i] = static_cast<TokenId>(buf[4 * i]) | (static_cast<TokenId>(buf[4 * i + 1]) << 8) |
             (static_cast<TokenId>(buf[4 * i + 2]) << 16) | (static_cast<TokenId>(buf[4 * i + 3]) << 24);
  }
  return out;
}

Document CorpusStore::get_document(DocId id) const {
  const auto& e = entry(id);
  Document d;
  d.id = id;
  d.source = e.source;
  d.stage = e.stage;
  d.answer_offset = e.answer_offset;
  d.tokens = read_tokens(id, 0, e.token_length);
  if (meta_.tokenizer_id == kByteTokenizer) d.text = detokenize(d.tokens);
  return d;
}

std::string CorpusStore::read_text(DocId id) const {
  const auto& e = entry(id);
  return detokenize(read_tokens(id, 0, e.token_length));
}

std::vector<DocId> CorpusStore::ids_for_source(std::string_view source) const {
  std::vector<DocId> out;
  for (const auto& e : entries_)
    if (e.source == source) out.push_back(e.id);
  return out;
}

std::vector<std::string> CorpusStore::sources() const {
  std::set<std::string> s;
  for (const auto& e : entries_) s.insert(e.source);
  return {s.begin(), s.end()};
}

void CorpusStore::set_stage_tags(const std::unordered_map<std::uint64_t, StageTag>& tags) {
  flush();
  for (auto& e : entries_) {
    if (auto it = tags.find(e.id.value); it != tags.end()) e.stage = it->second;
  }
  if (index_out_.is_open()) index_out_.close();
  if (blob_out_.is_open()) blob_out_.close();
  const auto tmp = dir_ / "index.jsonl.tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp.string());
    for (const auto& e : entries_) write_index_line(out, e);
  }
  fs::rename(tmp, dir_ / kIndexFile);
}

void CorpusStore::verify() const {
  std::uint64_t expected_offset = 0;
  std::set<std::uint64_t> seen;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    const auto where = "index entry " + std::to_string(i + 1) + " (" + e.id.hex() + ")";
    if (e.token_length == 0) throw ValidationError(where + ": zero length");
    if (e.byte_offset != expected_offset) throw ValidationError(where + ": offset does not continue the blob");
    if (!seen.insert(e.id.value).second) throw ValidationError(where + ": duplicate doc_id");
    if (e.answer_offset && *e.answer_offset > e.token_length) throw ValidationError(where + ": answer_offset past end");
    expected_offset += e.token_length * 4;
  }
  if (blob_out_.is_open()) const_cast<std::ofstream&>(blob_out_).flush();
  const auto blob_size = fs::file_size(dir_ / kBlobFile);
  if (blob_size != expected_offset) {
    throw ValidationError("tokens.bin has " + std::to_string(blob_size) + " bytes, index covers " +
                          std::to_string(expected_offset));
  }
}

}  // namespace dataforge
