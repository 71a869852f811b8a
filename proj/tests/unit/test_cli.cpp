#include <doctest.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dataforge/checkpoint.hpp"
#include "dataforge/cli.hpp"
#include "synthetic.hpp"

using namespace dataforge;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("usage errors exit 64") {
  CHECK(run_cli({}).code == cli::kExitUsage);
  const auto r = run_cli({"frobnicate"});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("frobnicate") != std::string::npos);
  CHECK(run_cli({"rope-base"}).code == cli::kExitUsage);
  CHECK(run_cli({"rope-base", "--target", "x"}).code == cli::kExitUsage);
  CHECK(run_cli({"--help"}).code == cli::kExitOk);
  CHECK(run_cli({"pack", "--help"}).code == cli::kExitOk);
}

TEST_CASE("rope-base") {
  const auto r = run_cli({"rope-base", "--target", "65536"});
  CHECK(r.code == 0);
  CHECK(r.out.find("514640") != std::string::npos);
  const auto j = nlohmann::json::parse(run_cli({"rope-base", "--target", "262144", "--json"}).out);
  CHECK(j.at("base").get<double>() == 3691950.0);
  CHECK(run_cli({"rope-base", "--target", "1000"}).code == cli::kExitValidation);
}

TEST_CASE("ingest, pack, batch-plan, validate") {
  dftest::ScratchDir tmp("cli-flow");
  const auto store = (tmp.path / "store").string();
  {
    std::ofstream f(tmp.path / "docs.jsonl");
    dataforge::Rng rng(1);
    for (int i = 0; i < 60; ++i) f << nlohmann::json{{"text", dftest::prose(rng, 50 + rng.below(400))}}.dump() << "\n";
  }
  auto r = run_cli({"ingest", "--store", store, "--input", (tmp.path / "docs.jsonl").string(), "--source", "web"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("ingested 60") != std::string::npos);
  CHECK(fs::exists(store + ".manifest.json"));
  // idempotent
  r = run_cli({"ingest", "--store", store, "--input", (tmp.path / "docs.jsonl").string(), "--source", "web"});
  CHECK(r.out.find("duplicates 60") != std::string::npos);

  const auto ds = (tmp.path / "ds").string();
  r = run_cli({"pack", "--store", store, "--regime", "short", "--L", "256", "--out", ds});
  REQUIRE(r.code == 0);
  const auto manifest = nlohmann::json::parse(slurp(ds + ".manifest.json"));
  CHECK(manifest.at("command") == "pack");
  CHECK(manifest.at("tool_version") == "0.1.0");
  CHECK(manifest.at("inputs").size() == 1);

  const auto plan = (tmp.path / "plan.jsonl").string();
  r = run_cli({"batch-plan", "--dataset", ds, "--mbs", "2", "--step-sequences", "8", "--out", plan});
  REQUIRE(r.code == 0);
  std::ifstream pf(plan);
  std::string line;
  int steps = 0;
  while (std::getline(pf, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("microbatches"));
    ++steps;
  }
  CHECK(steps > 0);

  CHECK(run_cli({"validate", "--dataset", ds, "--store", store}).code == 0);
  CHECK(run_cli({"validate", "--store", store}).code == 0);

  // corrupt the second index line
  const auto idx = fs::path(ds) / "sequences.idx.jsonl";
  auto text = slurp(idx);
  text[text.find('\n') + 2] = '#';
  std::ofstream(idx, std::ios::binary | std::ios::trunc) << text;
  r = run_cli({"validate", "--dataset", ds});
  CHECK(r.code == cli::kExitValidation);
  CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("io failures exit 2") {
  dftest::ScratchDir tmp("cli-io");
  auto r = run_cli({"ingest", "--store", (tmp.path / "s").string(), "--input", (tmp.path / "nope.jsonl").string(),
                "--source", "x"});
  CHECK(r.code == cli::kExitIo);
  r = run_cli({"ckpt-diff", (tmp.path / "a.ckpt").string(), (tmp.path / "b.ckpt").string()});
  CHECK(r.code == cli::kExitIo);
}

TEST_CASE("ensemble and ckpt-diff") {
  dftest::ScratchDir tmp("cli-ens");
  Checkpoint a, b;
  a.tensors["w"] = Tensor{{2}, {0, 2}};
  a.metadata.run_id = "a";
  b.tensors["w"] = Tensor{{2}, {2, 0}};
  b.metadata.run_id = "b";
  write_checkpoint(tmp.path / "a.ckpt", a);
  write_checkpoint(tmp.path / "b.ckpt", b);
  const auto out = (tmp.path / "m.ckpt").string();
  auto r = run_cli({"ensemble", "--in", (tmp.path / "a.ckpt").string(), (tmp.path / "b.ckpt").string(), "--out", out});
  REQUIRE(r.code == 0);
  CHECK(read_checkpoint(out).tensors.at("w").data == std::vector<float>{1, 1});
  CHECK(fs::exists(out + ".manifest.json"));
  r = run_cli({"ckpt-diff", (tmp.path / "a.ckpt").string(), out});
  CHECK(r.code == 0);
  CHECK(r.out.find("w") != std::string::npos);
  r = run_cli({"ensemble", "--in", (tmp.path / "a.ckpt").string(), "--out", out});
  CHECK(r.code == cli::kExitUsage);
}

TEST_CASE("mathgen") {
  dftest::ScratchDir tmp("cli-mathgen");
  const auto out = (tmp.path / "qa.jsonl").string();
  const auto r = run_cli({"mathgen", "--templates", DATAFORGE_ASSET_DIR "/templates", "--per-template", "20", "--seed", "3",
                      "--out", out});
  REQUIRE(r.code == 0);
  std::ifstream f(out);
  std::string line;
  int n = 0;
  while (std::getline(f, line)) ++n;
  CHECK(n == 200);
  CHECK(fs::exists(out + ".stats.json"));
  CHECK(slurp(out) == [&] {
    const auto out2 = (tmp.path / "qa2.jsonl").string();
    run_cli({"mathgen", "--templates", DATAFORGE_ASSET_DIR "/templates", "--per-template", "20", "--seed", "3", "--out", out2});
    return slurp(out2);
  }());
}
