#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "dataforge/ensembler.hpp"
#include "dataforge/error.hpp"
#include "dataforge/rng.hpp"
#include "synthetic.hpp"

using namespace dataforge;

namespace {

Checkpoint single(std::vector<float> values, std::string run = "r") {
  Checkpoint c;
  c.tensors["w"] = Tensor{{values.size()}, std::move(values)};
  c.metadata.run_id = std::move(run);
  return c;
}

Checkpoint random_ckpt(Rng& rng, std::string run) {
  Checkpoint c;
  c.metadata.run_id = std::move(run);
  const std::vector<std::pair<std::string, std::vector<std::uint64_t>>> layout{
      {"embed", {16, 8}}, {"layer.0.w", {8, 8}}, {"layer.0.b", {8}}, {"scale", {}}};
  for (const auto& [name, shape] : layout) {
    Tensor t;
    t.shape = shape;
    t.data.resize(t.element_count());
    for (auto& x : t.data) x = static_cast<float>((rng.unit() - 0.5) * std::pow(10.0, static_cast<double>(rng.below(7)) - 3));
    c.tensors[name] = std::move(t);
  }
  return c;
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("two opposite checkpoints average to the midpoint") {
  const std::vector<Checkpoint> in{single({0, 2}, "a"), single({2, 0}, "b")};
  const auto out = average_checkpoints(in);
  CHECK(out.tensors.at("w").data == std::vector<float>{1, 1});
  CHECK(out.metadata.constituents == std::vector<std::string>{"a", "b"});
}

TEST_CASE("mean of identical checkpoints is the checkpoint") {
  Rng rng(1);
  const auto c = random_ckpt(rng, "x");
  const std::vector<Checkpoint> in{c, c, c};
  const auto out = average_checkpoints(in);
  for (const auto& [name, t] : c.tensors) CHECK(out.tensors.at(name).data == t.data);
}

TEST_CASE("input order does not change a single bit") {
  Rng rng(2);
  std::vector<Checkpoint> in;
  for (int i = 0; i < 5; ++i) in.push_back(random_ckpt(rng, "run" + std::to_string(i)));
  const auto ref = average_checkpoints(in);
  for (int trial = 0; trial < 20; ++trial) {
    rng.shuffle(in);
    const auto out = average_checkpoints(in);
    for (const auto& [name, t] : ref.tensors) CHECK(out.tensors.at(name).data == t.data);
  }
}

TEST_CASE("mean is within one float rounding of the exact value") {
  Rng rng(3);
  std::vector<Checkpoint> in;
  for (int i = 0; i < 4; ++i) in.push_back(random_ckpt(rng, "r"));
  const auto out = average_checkpoints(in);
  for (const auto& [name, t] : out.tensors) {
    for (std::size_t e = 0; e < t.data.size(); ++e) {
      long double exact = 0;
      for (const auto& c : in) exact += c.tensors.at(name).data[e];
      exact /= 4;
      const auto want = static_cast<float>(exact);
      CHECK(std::abs(t.data[e] - want) <= std::abs(want) * std::numeric_limits<float>::epsilon());
    }
  }
}

TEST_CASE("weights") {
  const std::vector<Checkpoint> in{single({0, 4}), single({4, 0})};
  const std::vector<double> w{3, 1};
  const auto out = average_checkpoints(in, std::span<const double>(w));
  CHECK(out.tensors.at("w").data == std::vector<float>{1, 3});
  const std::vector<double> bad{1, -1};
  CHECK_THROWS_AS(average_checkpoints(in, std::span<const double>(bad)), ValidationError);
  const std::vector<double> few{1};
  CHECK_THROWS_AS(average_checkpoints(in, std::span<const double>(few)), ValidationError);
}

TEST_CASE("structural mismatches are refused") {
  CHECK_THROWS_AS(average_checkpoints(std::vector<Checkpoint>{single({1})}), ValidationError);
  const std::vector<Checkpoint> shape{single({1, 2}), single({1, 2, 3})};
  const auto msg = error_of([&] { (void)average_checkpoints(shape); });
  CHECK(msg.find("w") != std::string::npos);
  auto extra = single({1, 2});
  extra.tensors["bias"] = Tensor{{1}, {0}};
  const std::vector<Checkpoint> names{single({1, 2}), extra};
  CHECK(error_of([&] { (void)average_checkpoints(names); }).find("bias") != std::string::npos);
}

TEST_CASE("non-finite values are named") {
  const std::vector<Checkpoint> in{single({1, 2, 3}), single({1, std::numeric_limits<float>::quiet_NaN(), 3})};
  const auto msg = error_of([&] { (void)average_checkpoints(in); });
  CHECK(msg.find("'w'") != std::string::npos);
  CHECK(msg.find("index 1") != std::string::npos);
}

TEST_CASE("checkpoint files") {
  dftest::ScratchDir tmp("ckpt");
  Rng rng(4);
  auto c = random_ckpt(rng, "alpha");
  c.metadata.seed = 9;
  c.metadata.step = 1000;
  write_checkpoint(tmp.path / "a.ckpt", c);
  const auto back = read_checkpoint(tmp.path / "a.ckpt");
  CHECK(back.metadata.run_id == "alpha");
  CHECK(back.metadata.step == 1000u);
  for (const auto& [name, t] : c.tensors) {
    CHECK(back.tensors.at(name).shape == t.shape);
    CHECK(back.tensors.at(name).data == t.data);
  }
  CHECK(structural_diff(c, back).empty());
  for (const auto& d : value_diff(c, back)) CHECK(d.max_abs == 0.0);

  auto d = c;
  d.metadata.run_id = "beta";
  d.tensors["scale"].data[0] = std::numeric_limits<float>::infinity();
  write_checkpoint(tmp.path / "b.ckpt", d);
  const auto msg = error_of([&] { (void)read_checkpoint(tmp.path / "b.ckpt"); });
  CHECK(msg.find("'scale'") != std::string::npos);
  CHECK(msg.find("index 0") != std::string::npos);
  CHECK(read_checkpoint(tmp.path / "b.ckpt", true).tensors.at("scale").data[0] == std::numeric_limits<float>::infinity());

  std::ofstream(tmp.path / "junk.ckpt") << "xyz";
  CHECK_THROWS_AS(read_checkpoint(tmp.path / "junk.ckpt"), ValidationError);
  CHECK_THROWS_AS(read_checkpoint(tmp.path / "missing.ckpt"), IoError);

  write_checkpoint(tmp.path / "c.ckpt", random_ckpt(rng, "gamma"));
  const std::vector<std::filesystem::path> paths{tmp.path / "a.ckpt", tmp.path / "c.ckpt"};
  const auto avg = average_checkpoint_files(paths);
  CHECK(avg.metadata.constituents == std::vector<std::string>{"alpha", "gamma"});
}
