#include "dataforge/packed_dataset.hpp"

#include "dataforge/error.hpp"

namespace dataforge {

namespace fs = std::filesystem;
using json = nlohmann::json;

PackedSequence SequenceRecord::skeleton() const {
  PackedSequence s;
  s.length = length;
  s.segments = segments;
  return s;
}

json segment_to_json(const SegmentRef& s) {
  return json{{"doc_id", s.doc_id.hex()}, {"doc_start", s.doc_start}, {"seq_start", s.seq_start},
              {"length", s.length},       {"loss", s.loss},           {"role", std::string(to_string(s.role))},
              {"group", s.group}};
}

SegmentRef segment_from_json(const json& j) {
  SegmentRef s;
  s.doc_id = DocId::parse(j.at("doc_id").get<std::string>());
  s.doc_start = j.at("doc_start").get<std::uint64_t>();
  s.seq_start = j.at("seq_start").get<std::uint64_t>();
  s.length = j.at("length").get<std::uint64_t>();
  s.loss = j.at("loss").get<bool>();
  s.role = parse_segment_role(j.at("role").get<std::string>());
  s.group = j.at("group").get<std::uint32_t>();
  return s;
}

PackedDatasetWriter::PackedDatasetWriter(const fs::path& dir) : dir_(dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  bin_.open(dir / "sequences.bin", std::ios::binary | std::ios::trunc);
  idx_.open(dir / "sequences.idx.jsonl", std::ios::trunc);
  if (!bin_ || !idx_) throw IoError("cannot write dataset in " + dir.string());
}

void PackedDatasetWriter::append(const PackedSequence& seq, const SequenceTags& tags) {
  json segs = json::array();
  for (const auto& s : seq.segments) segs.push_back(segment_to_json(s));
  json rec = {{"seq", count_},          {"L", seq.length},         {"offset", offset_},
              {"source", tags.source},  {"entry", tags.entry},     {"segments", std::move(segs)},
              {"boundaries", seq.boundaries()}};
  idx_ << rec.dump() << '\n';
  std::vector<char> buf(seq.tokens.size() * 4);
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    const auto t = seq.tokens[i];
    for (int b = 0; b < 4; ++b) buf[4 * i + b] = static_cast<char>((t >> (8 * b)) & 0xff);
  }
  bin_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!bin_ || !idx_) throw IoError("write failed in " + dir_.string());
  offset_ += buf.size();
  ++count_;
}

void PackedDatasetWriter::finish(const json& stats) {
  bin_.close();
  idx_.close();
  std::ofstream out(dir_ / "stats.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir_ / "stats.json").string());
  out << stats.dump(2) << '\n';
}

PackedDataset PackedDataset::open(const fs::path& dir) {
  PackedDataset ds;
  ds.dir_ = dir;
  std::ifstream idx(dir / "sequences.idx.jsonl");
  if (!idx) throw IoError("cannot read " + (dir / "sequences.idx.jsonl").string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(idx, line)) {
    ++lineno;
    const auto where = "sequences.idx.jsonl line " + std::to_string(lineno);
    SequenceRecord r;
    try {
      const json j = json::parse(line);
      r.index = j.at("seq").get<std::size_t>();
      r.length = j.at("L").get<std::uint64_t>();
      r.byte_offset = j.at("offset").get<std::uint64_t>();
      r.tags.source = j.value("source", "");
      r.tags.entry = j.value("entry", "");
      for (const auto& s : j.at("segments")) r.segments.push_back(segment_from_json(s));
      r.boundaries = j.at("boundaries").get<std::vector<std::uint64_t>>();
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (r.index != ds.records_.size()) throw ValidationError(where + ": sequence number out of order");
    ds.records_.push_back(std::move(r));
  }
  std::ifstream st(dir / "stats.json");
  if (st) {
    try {
      st >> ds.stats_;
    } catch (const json::exception& e) {
      throw ValidationError("stats.json: " + std::string(e.what()));
    }
  }
  return ds;
}

PackedSequence PackedDataset::read(std::size_t index) const {
  const auto& r = records_.at(index);
  std::ifstream bin(dir_ / "sequences.bin", std::ios::binary);
  if (!bin) throw IoError("cannot read " + (dir_ / "sequences.bin").string());
  bin.seekg(static_cast<std::streamoff>(r.byte_offset));
  std::vector<unsigned char> buf(r.length * 4);
  bin.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(bin.gcount()) != buf.size()) {
    throw ValidationError("sequences.bin truncated at sequence " + std::to_string(index));
  }
  PackedSequence s = r.skeleton();
  s.tokens.resize(r.length);
  for (std::size_t i = 0; i < r.length; ++i) {
    s.tokens[i] = static_cast<TokenId>(buf[4 * i]) | (static_cast<TokenId>(buf[4 * i + 1]) << 8) |
                  (static_cast<TokenId>(buf[4 * i + 2]) << 16) | (static_cast<TokenId>(buf[4 * i + 3]) << 24);
  }
  return s;
}

void PackedDataset::validate(const TokenSource* docs) const {
  std::uint64_t offset = 0;
  for (const auto& r : records_) {
    const auto where = "sequences.idx.jsonl line " + std::to_string(r.index + 1);
    if (r.byte_offset != offset) throw ValidationError(where + ": offset does not continue sequences.bin");
    offset += r.length * 4;
    const PackedSequence s = read(r.index);
    try {
      check_sequence(s, docs);
    } catch (const Error& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (s.boundaries() != r.boundaries) throw ValidationError(where + ": boundaries disagree with segments");
  }
  const auto size = fs::file_size(dir_ / "sequences.bin");
  if (size != offset) {
    throw ValidationError("sequences.bin has " + std::to_string(size) + " bytes, index covers " + std::to_string(offset));
  }
}

}  // namespace dataforge
