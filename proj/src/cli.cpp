#include "dataforge/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "dataforge/batch_planner.hpp"
#include "dataforge/checkpoint.hpp"
#include "dataforge/corpus_store.hpp"
#include "dataforge/ensembler.hpp"
#include "dataforge/error.hpp"
#include "dataforge/longqa.hpp"
#include "dataforge/manifest.hpp"
#include "dataforge/mathgen/generator.hpp"
#include "dataforge/mixture.hpp"
#include "dataforge/packed_dataset.hpp"
#include "dataforge/packer.hpp"
#include "dataforge/recipe.hpp"
#include "dataforge/rope.hpp"
#include "dataforge/teacher.hpp"

namespace dataforge::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::vector<std::string> kCommands = {"ingest", "pack",     "mix",       "batch-plan", "rope-base", "mathgen",
                                            "longqa", "ensemble", "ckpt-diff", "validate",   "recipe"};

std::string usage() {
  std::string s = "usage: dataforge <command> [options]\n\ncommands:\n";
  for (const auto& c : kCommands) s += "  " + c + "\n";
  s += "\nrun 'dataforge <command> --help' for options\n";
  return s;
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

std::uint64_t default_seed() {
  const auto s = env_or("DATAFORGE_SEED", "0");
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos, 0);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("DATAFORGE_SEED='" + s + "' is not an unsigned integer");
  }
}

using Clock = std::chrono::steady_clock;

struct Run {
  RunManifest manifest;
  Clock::time_point start = Clock::now();

  void finish(const fs::path& where) {
    manifest.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
    manifest.write(where);
  }
};

fs::path require_store(const std::string& store) {
  if (store.empty()) throw ValidationError("no store given (use --store or DATAFORGE_STORE)");
  return store;
}

std::unique_ptr<Teacher> teacher_from(const std::string& config_path) {
  if (config_path.empty()) return std::make_unique<StubTeacher>();
  return make_teacher(TeacherConfig::load(config_path));
}

std::vector<double> parse_weights(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(part, &pos));
      if (pos != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw ValidationError("bad weight '" + part + "'");
    }
  }
  return out;
}

MixtureSpec spec_from(const std::string& spec) {
  if (is_builtin_spec(spec)) return builtin_spec(spec);
  return MixtureSpec::load(spec);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty() || args[0] == "-h" || args[0] == "--help") {
    (args.empty() ? err : out) << usage();
    return args.empty() ? kExitUsage : kExitOk;
  }
  if (std::find(kCommands.begin(), kCommands.end(), args[0]) == kCommands.end()) {
    err << "dataforge: unknown command '" << args[0] << "'\n\n" << usage();
    return kExitUsage;
  }

  CLI::App app{"dataforge: corpus packing, mixtures and synthetic data for long-context training", "dataforge"};
  app.require_subcommand(1);
  const std::string store_default = env_or("DATAFORGE_STORE", "");
  std::uint64_t seed = 0;
  std::function<void()> action;

  std::string store = store_default, input, source, out_path, spec_arg, dataset, key = "sum_len_sq", regime = "short",
              teacher_cfg, kind = "single_doc", weights, manifest_arg, templates;
  std::uint64_t budget = 0, seq_len = 0, step_sequences = 0, max_samples = 0, per_template = 100, max_attempts = 1000;
  std::size_t mbs = 1, max_in_flight = 4;
  std::vector<std::string> sources, inputs;
  std::string stage2_fraction = "1/2";
  int stage = 0;
  bool no_nest = false, allow_nonfinite = false, as_json = false;
  double base0 = 10000, t0 = 4096, target = 0, kappa = 0;

  auto add_seed = [&](CLI::App* c) {
    c->add_option("--seed", seed, "random seed (default: DATAFORGE_SEED or 0)");
  };
  auto add_store = [&](CLI::App* c) {
    c->add_option("--store", store, "corpus store directory (default: DATAFORGE_STORE)");
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "tokenize JSON-lines documents into a corpus store");
  add_store(ingest);
  ingest->add_option("--input", input, "JSON-lines file")->required();
  ingest->add_option("--source", source, "source label")->required();
  ingest->callback([&] {
    action = [&] {
      Run run;
      const auto dir = require_store(store);
      auto st = CorpusStore::open_or_create(dir);
      const auto res = st.ingest_jsonl(input, source);
      st.flush();
      out << "ingested " << res.ingested << ", duplicates " << res.duplicates << ", empty " << res.empty << "\n";
      run.manifest.command = "ingest";
      run.manifest.set_config({{"input", input}, {"source", source}, {"store", dir.string()}});
      run.manifest.add_input(input);
      run.manifest.add_output(dir);
      run.finish(manifest_path_for(dir));
    };
  });

  // pack
  auto* pack = app.add_subcommand("pack", "pack store documents into fixed-length sequences");
  add_store(pack);
  add_seed(pack);
  pack->add_option("--regime", regime, "short | long | sft")->check(CLI::IsMember({"short", "long", "sft"}));
  pack->add_option("--L", seq_len, "sequence length")->required();
  pack->add_option("--source", sources, "source labels to include (default: all)");
  pack->add_option("--max-sequences", max_samples, "stop after this many sequences (0 = all)");
  pack->add_option("--out", out_path, "output dataset directory")->required();
  pack->callback([&] {
    action = [&] {
      Run run;
      const auto dir = require_store(store);
      const auto st = CorpusStore::open(dir);
      std::vector<DocId> ids;
      if (sources.empty()) {
        for (const auto& e : st.entries()) ids.push_back(e.id);
      } else {
        for (const auto& s : sources) {
          auto v = st.ids_for_source(s);
          if (v.empty()) throw ValidationError("store has no documents with source '" + s + "'");
          ids.insert(ids.end(), v.begin(), v.end());
        }
      }
      StoreTokenSource docs(st);
      PackedDatasetWriter w(out_path);
      json stats;
      if (regime == "short") {
        ShortPackOptions o;
        o.seed = seed;
        o.max_sequences = max_samples;
        auto r = pack_short(docs, ids, seq_len, o);
        for (const auto& s : r.sequences) w.append(s, {"", "short"});
        stats = {{"emitted", r.sequences.size()},        {"tokens_consumed", r.stats.tokens_consumed},
                 {"tokens_emitted", r.stats.tokens_emitted}, {"discarded_tokens", r.stats.tokens_discarded},
                 {"tail_dropped", r.stats.tail_dropped},   {"docs_consumed", r.stats.docs_consumed}};
      } else if (regime == "long") {
        LongPackOptions o;
        o.seed = seed;
        o.max_sequences = max_samples;
        auto r = make_long_sequences(docs, ids, seq_len, o);
        for (const auto& s : r.sequences) w.append(s, {"", "long"});
        stats = {{"emitted", r.sequences.size()},
                 {"filtered_docs", r.stats.filtered_docs},
                 {"docs_used", r.stats.docs_used},
                 {"superlong_docs", r.stats.superlong_docs}};
      } else {
        std::vector<InstructionSample> samples;
        std::size_t oversize = 0;
        for (const auto id : ids) {
          const auto& e = st.entry(id);
          if (e.token_length > seq_len) {
            ++oversize;
            continue;
          }
          InstructionSample s;
          s.id = id.hex();
          const auto split = std::min(e.answer_offset.value_or(0), e.token_length);
          if (split) s.spans.push_back({SegmentRole::question, st.read_tokens(id, 0, split), id, 0});
          s.spans.push_back({SegmentRole::answer, st.read_tokens(id, split, e.token_length - split), id, split});
          samples.push_back(std::move(s));
        }
        auto seqs = pack_sft(samples, seq_len);
        if (max_samples && seqs.size() > max_samples) seqs.resize(max_samples);
        for (const auto& s : seqs) w.append(s, {"", "sft"});
        stats = {{"emitted", seqs.size()}, {"samples", samples.size()}, {"oversize_samples", oversize}};
      }
      w.finish(stats);
      out << "wrote " << w.count() << " sequences to " << out_path << "\n";
      run.manifest.command = "pack";
      run.manifest.seed = seed;
      run.manifest.set_config({{"regime", regime}, {"L", seq_len}, {"sources", sources}, {"max_sequences", max_samples}});
      run.manifest.add_input(dir);
      run.manifest.add_output(out_path);
      run.finish(manifest_path_for(out_path));
    };
  });

  // mix
  auto* mix = app.add_subcommand("mix", "realize a mixture spec into a packed dataset and plan.json");
  add_store(mix);
  add_seed(mix);
  mix->add_option("--spec", spec_arg, "mixture spec JSON file or built-in recipe name")->required();
  mix->add_option("--budget", budget, "token budget (overrides the spec)");
  mix->add_option("--stage", stage, "restrict to the stage-1 or stage-2 document split (0 = all)")
      ->check(CLI::IsMember({0, 1, 2}));
  mix->add_option("--stage2-fraction", stage2_fraction, "share of documents in stage 2");
  mix->add_flag("--no-nest", no_nest, "train stage-2 64K data as standalone 64K sequences");
  mix->add_option("--teacher", teacher_cfg, "teacher config JSON (default: offline stub)");
  mix->add_option("--out", out_path, "output directory")->required();
  mix->callback([&] {
    action = [&] {
      Run run;
      const auto dir = require_store(store);
      const auto st = CorpusStore::open(dir);
      auto spec = spec_from(spec_arg);
      if (budget) spec.token_budget = budget;
      spec.seed = seed;
      if (no_nest) spec.nest_long64k = false;
      std::unordered_set<std::uint64_t> allowed;
      RealizeOptions ro;
      if (stage) {
        std::vector<DocId> all;
        for (const auto& e : st.entries()) all.push_back(e.id);
        const auto split = split_stages(all, mathgen::parse_rational(stage2_fraction), seed);
        for (const auto id : stage == 1 ? split.stage1 : split.stage2) allowed.insert(id.value);
        ro.allowed_docs = &allowed;
      }
      auto teacher = teacher_from(teacher_cfg);
      ro.teacher = teacher.get();
      fs::create_directories(out_path);
      if (fs::exists(fs::path(out_path) / "dataset")) fs::remove_all(fs::path(out_path) / "dataset");
      PackedDatasetWriter w(fs::path(out_path) / "dataset");
      auto res = realize_mixture(spec, st, ro, w);
      w.finish({{"mixture", spec.name}, {"sequences", w.count()}, {"realized_tokens", res.plan.realized_tokens()}});
      write_plan(out_path, res.plan);
      if (!res.longqa_samples.empty()) longqa::write_jsonl(fs::path(out_path) / "longqa.jsonl", res.longqa_samples);
      out << "realized " << res.plan.realized_tokens() << " of " << spec.token_budget << " tokens in " << w.count()
          << " sequences; short:long = " << std::fixed << std::setprecision(4) << res.plan.short_ratio() << ":"
          << 1.0 - res.plan.short_ratio() << "\n";
      run.manifest.command = "mix";
      run.manifest.seed = seed;
      json cfg = spec.to_json();
      cfg["stage"] = stage;
      cfg["stage2_fraction"] = stage2_fraction;
      run.manifest.set_config(cfg);
      run.manifest.add_input(dir);
      if (!is_builtin_spec(spec_arg)) run.manifest.add_input(spec_arg);
      run.manifest.add_output(out_path);
      run.finish(manifest_path_for(out_path));
    };
  });

  // batch-plan
  auto* bp = app.add_subcommand("batch-plan", "order each step's microbatches by attention cost");
  bp->add_option("--dataset", dataset, "packed dataset directory")->required();
  bp->add_option("--mbs", mbs, "sequences per microbatch")->required();
  bp->add_option("--key", key, "sum_len_sq | sum_len")->check(CLI::IsMember({"sum_len_sq", "sum_len"}));
  bp->add_option("--step-sequences", step_sequences, "sequences per optimizer step (0 = whole dataset)");
  bp->add_option("--out", out_path, "output JSON-lines file")->required();
  bp->callback([&] {
    action = [&] {
      Run run;
      const auto ds = PackedDataset::open(dataset);
      const auto plans = plan_dataset(ds, step_sequences, mbs, parse_cost_key(key));
      std::ofstream f(out_path, std::ios::trunc);
      if (!f) throw IoError("cannot write " + out_path);
      for (const auto& p : plans) f << p.to_json().dump() << '\n';
      f.close();
      out << "wrote " << plans.size() << " step plans to " << out_path << "\n";
      run.manifest.command = "batch-plan";
      run.manifest.set_config({{"mbs", mbs}, {"key", key}, {"step_sequences", step_sequences}});
      run.manifest.add_input(dataset);
      run.manifest.add_output(out_path);
      run.finish(manifest_path_for(out_path));
    };
  });

  // rope-base
  auto* rb = app.add_subcommand("rope-base", "RoPE base frequency for an extended context length");
  rb->add_option("--base0", base0, "original base");
  rb->add_option("--t0", t0, "original context length");
  rb->add_option("--target", target, "target context length")->required();
  rb->add_option("--kappa", kappa, "exponent override (default: derived from base0 and t0)");
  rb->add_flag("--json", as_json, "print JSON");
  rb->add_option("--manifest", manifest_arg, "write a run manifest to this path");
  rb->callback([&] {
    action = [&] {
      Run run;
      rope::RopeConfig cfg;
      cfg.base0 = base0;
      cfg.t0 = t0;
      cfg.kappa = kappa;
      // published bases belong to the original 10,000 / 4096 configuration only
      if (base0 == 10000 && t0 == 4096 && kappa == 0) cfg.published = rope::published_bases();
      const auto r = rope::extend_base(target, cfg);
      if (as_json) {
        json j = {{"target", target}, {"kappa", r.kappa}, {"computed", r.computed}, {"rounded", r.rounded},
                  {"base", r.value()}};
        j["published"] = r.published ? json(*r.published) : json(nullptr);
        out << j.dump() << "\n";
      } else {
        out << std::setprecision(10);
        out << "target    " << static_cast<std::uint64_t>(target) << "\n";
        out << "kappa     " << r.kappa << "\n";
        out << "computed  " << std::fixed << std::setprecision(2) << r.computed << "\n";
        out << "published " << (r.published ? std::to_string(*r.published) : std::string("-")) << "\n";
        out << "base      " << r.value() << "\n";
      }
      if (!manifest_arg.empty()) {
        run.manifest.command = "rope-base";
        run.manifest.set_config({{"base0", base0}, {"t0", t0}, {"target", target}, {"kappa", kappa}});
        run.finish(manifest_arg);
      }
    };
  });

  // mathgen
  auto* mg = app.add_subcommand("mathgen", "expand math templates into question/answer pairs");
  add_seed(mg);
  mg->add_option("--templates", templates, "template file or directory of *.tmpl")->required();
  mg->add_option("--per-template", per_template, "instances per template");
  mg->add_option("--max-attempts", max_attempts, "rejection-sampling attempts per instance");
  mg->add_option("--out", out_path, "output JSON-lines file")->required();
  mg->callback([&] {
    action = [&] {
      Run run;
      std::vector<mathgen::MathTemplate> ts;
      if (fs::is_directory(templates)) {
        ts = mathgen::load_template_dir(templates);
      } else {
        ts.push_back(mathgen::load_template_file(templates));
      }
      const auto res = mathgen::expand_dataset(ts, per_template, seed, max_attempts);
      mathgen::write_jsonl(out_path, res.instances);
      const auto stats_path = out_path + ".stats.json";
      std::ofstream sf(stats_path, std::ios::trunc);
      if (!sf) throw IoError("cannot write " + stats_path);
      sf << res.stats_json().dump(2) << '\n';
      sf.close();
      for (const auto& s : res.stats) {
        out << s.name << ": " << s.emitted << " emitted";
        if (s.rejected) out << " (template rejected: " << s.reason << ")";
        else out << ", acceptance " << std::fixed << std::setprecision(3) << s.acceptance_rate();
        out << "\n";
      }
      run.manifest.command = "mathgen";
      run.manifest.seed = seed;
      run.manifest.set_config({{"per_template", per_template}, {"max_attempts", max_attempts}});
      run.manifest.add_input(templates);
      run.manifest.add_output(out_path);
      run.manifest.add_output(stats_path);
      run.finish(manifest_path_for(out_path));
    };
  });

  // longqa
  auto* lq = app.add_subcommand("longqa", "synthesize long-context QA samples with a teacher");
  add_store(lq);
  add_seed(lq);
  lq->add_option("--source", sources, "source labels (default: all)");
  lq->add_option("--kind", kind, "single_doc | concat")->check(CLI::IsMember({"single_doc", "concat"}));
  lq->add_option("--teacher", teacher_cfg, "teacher config JSON (default: offline stub)");
  lq->add_option("--max-samples", max_samples, "stop after this many samples (0 = all)");
  lq->add_option("--max-in-flight", max_in_flight, "concurrent teacher requests");
  lq->add_option("--packed-out", dataset, "also pack the samples into 262144-token sequences here");
  lq->add_option("--out", out_path, "output JSON-lines file")->required();
  lq->callback([&] {
    action = [&] {
      Run run;
      const auto dir = require_store(store);
      const auto st = CorpusStore::open(dir);
      std::vector<DocId> ids;
      if (sources.empty()) {
        for (const auto& e : st.entries()) ids.push_back(e.id);
      } else {
        for (const auto& s : sources) {
          auto v = st.ids_for_source(s);
          ids.insert(ids.end(), v.begin(), v.end());
        }
      }
      if (kind == "single_doc") {
        std::erase_if(ids, [&](DocId id) { return st.entry(id).token_length < longqa::kMinDocTokens; });
      }
      auto teacher = teacher_from(teacher_cfg);
      longqa::Options o;
      o.seed = seed;
      o.max_in_flight = max_in_flight;
      const auto res = kind == "single_doc" ? longqa::build_single_doc_samples(st, ids, *teacher, o, max_samples)
                                            : longqa::build_concat_samples(st, ids, *teacher, o, max_samples);
      longqa::write_jsonl(out_path, res.samples);
      for (const auto& s : res.skipped) err << "skipped " << s.doc_id.hex() << ": " << s.reason << "\n";
      out << "wrote " << res.samples.size() << " samples to " << out_path << " (" << res.skipped.size()
          << " skipped)\n";
      run.manifest.command = "longqa";
      run.manifest.seed = seed;
      run.manifest.set_config({{"kind", kind}, {"sources", sources}, {"max_samples", max_samples},
                               {"teacher", teacher->model() + "/" + teacher->prompt_template_id()}});
      run.manifest.add_input(dir);
      if (!teacher_cfg.empty()) run.manifest.add_input(teacher_cfg);
      run.manifest.add_output(out_path);
      if (!dataset.empty()) {
        StoreTokenSource docs(st);
        std::vector<InstructionSample> inst;
        for (std::size_t i = 0; i < res.samples.size(); ++i) inst.push_back(res.samples[i].to_instruction(docs, std::to_string(i)));
        PackedDatasetWriter w(dataset);
        const auto seqs = pack_sft(inst, 262144);
        for (const auto& s : seqs) w.append(s, {"", "longqa"});
        w.finish({{"emitted", seqs.size()}, {"samples", inst.size()}});
        run.manifest.add_output(dataset);
      }
      run.finish(manifest_path_for(out_path));
    };
  });

  // ensemble
  auto* en = app.add_subcommand("ensemble", "average checkpoints elementwise");
  en->add_option("--in", inputs, "input checkpoints")->required()->expected(2, -1);
  en->add_option("--out", out_path, "output checkpoint")->required();
  en->add_option("--weights", weights, "comma-separated weights (default: uniform)");
  en->callback([&] {
    action = [&] {
      Run run;
      std::vector<fs::path> paths(inputs.begin(), inputs.end());
      std::optional<std::vector<double>> w;
      if (!weights.empty()) w = parse_weights(weights);
      const auto merged = w ? average_checkpoint_files(paths, std::span<const double>(*w)) : average_checkpoint_files(paths);
      write_checkpoint(out_path, merged);
      out << "averaged " << paths.size() << " checkpoints into " << out_path << "\n";
      run.manifest.command = "ensemble";
      run.manifest.set_config({{"weights", weights}});
      for (const auto& p : paths) run.manifest.add_input(p);
      run.manifest.add_output(out_path);
      run.finish(manifest_path_for(out_path));
    };
  });

  // ckpt-diff
  auto* cd = app.add_subcommand("ckpt-diff", "structural and value differences between two checkpoints");
  cd->add_option("a", input, "first checkpoint")->required();
  cd->add_option("b", out_path, "second checkpoint")->required();
  cd->add_flag("--allow-nonfinite", allow_nonfinite, "accept NaN/Inf values");
  cd->add_option("--manifest", manifest_arg, "write a run manifest to this path");
  cd->callback([&] {
    action = [&] {
      Run run;
      const auto a = read_checkpoint(input, allow_nonfinite);
      const auto b = read_checkpoint(out_path, allow_nonfinite);
      const auto structural = structural_diff(a, b);
      for (const auto& s : structural) out << "structure: " << s << "\n";
      if (structural.empty()) out << "structure: identical\n";
      double worst = 0.0;
      for (const auto& v : value_diff(a, b)) {
        out << "value: " << v.name << " max_abs " << std::setprecision(9) << v.max_abs << " at " << v.index << "\n";
        worst = std::max(worst, v.max_abs);
      }
      out << "max_abs " << std::setprecision(9) << worst << "\n";
      if (!manifest_arg.empty()) {
        run.manifest.command = "ckpt-diff";
        run.manifest.add_input(input);
        run.manifest.add_input(out_path);
        run.finish(manifest_arg);
      }
    };
  });

  // validate
  auto* va = app.add_subcommand("validate", "check a packed dataset or a corpus store");
  va->add_option("--dataset", dataset, "packed dataset directory");
  va->add_option("--store", store, "corpus store (token content check for --dataset, or verified on its own)");
  va->add_option("--manifest", manifest_arg, "write a run manifest to this path");
  va->callback([&] {
    action = [&] {
      Run run;
      if (dataset.empty() && store.empty()) throw ValidationError("validate needs --dataset or --store");
      std::optional<CorpusStore> st;
      if (!store.empty()) {
        st.emplace(CorpusStore::open(store));
        st->verify();
      }
      if (!dataset.empty()) {
        const auto ds = PackedDataset::open(dataset);
        std::optional<StoreTokenSource> docs;
        if (st) docs.emplace(*st);
        ds.validate(docs ? &*docs : nullptr);
        out << "dataset ok: " << ds.records().size() << " sequences\n";
      } else {
        out << "store ok: " << st->entries().size() << " documents, " << st->total_tokens() << " tokens\n";
      }
      if (!manifest_arg.empty()) {
        run.manifest.command = "validate";
        if (!dataset.empty()) run.manifest.add_input(dataset);
        if (!store.empty()) run.manifest.add_input(store);
        run.finish(manifest_arg);
      }
    };
  });

  // recipe
  auto* rc = app.add_subcommand("recipe", "run a built-in recipe end to end: split, mix, pack, longqa, batch-plan");
  add_store(rc);
  add_seed(rc);
  rc->add_option("name", spec_arg, "instella-long-stage1 | instella-long-stage2 | instella-long-sft")->required();
  rc->add_option("--budget", budget, "token budget")->required();
  rc->add_option("--stage2-fraction", stage2_fraction, "share of documents in stage 2");
  rc->add_option("--mbs", mbs, "sequences per microbatch");
  rc->add_option("--key", key, "sum_len_sq | sum_len")->check(CLI::IsMember({"sum_len_sq", "sum_len"}));
  rc->add_flag("--no-nest", no_nest, "train stage-2 64K data as standalone 64K sequences");
  rc->add_option("--teacher", teacher_cfg, "teacher config JSON (default: offline stub)");
  rc->add_option("--out", out_path, "output directory")->required();
  rc->callback([&] {
    action = [&] {
      Run run;
      const auto dir = require_store(store);
      const auto st = CorpusStore::open(dir);
      const auto spec = spec_from(spec_arg);
      auto teacher = teacher_from(teacher_cfg);
      RecipeOptions ro;
      ro.seed = seed;
      ro.budget = budget;
      ro.stage2_fraction = mathgen::parse_rational(stage2_fraction);
      ro.microbatch_size = mbs;
      ro.cost_key = parse_cost_key(key);
      ro.nest_long64k = !no_nest;
      ro.teacher = teacher.get();
      const auto res = run_recipe(spec, st, out_path, ro);
      out << spec.name << ": " << res.sequences << " sequences, " << res.plan.realized_tokens() << " tokens, "
          << res.steps << " steps";
      if (res.longqa_samples) out << ", " << res.longqa_samples << " long-context QA samples";
      out << "\nshort:long = " << std::fixed << std::setprecision(4) << res.plan.short_ratio() << ":"
          << 1.0 - res.plan.short_ratio() << "\n";
      run.manifest.command = "recipe " + spec.name;
      run.manifest.seed = seed;
      json cfg = spec.to_json();
      cfg["token_budget"] = budget;
      cfg["seed"] = seed;
      cfg["stage2_fraction"] = stage2_fraction;
      cfg["mbs"] = mbs;
      cfg["key"] = key;
      cfg["nest_long64k"] = !no_nest;
      run.manifest.set_config(cfg);
      run.manifest.add_input(dir);
      run.manifest.add_output(out_path);
      run.finish(manifest_path_for(out_path));
    };
  });

  try {
    seed = default_seed();
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.get_subcommand(args[0])->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "dataforge " << args[0] << ": " << e.what() << "\n\n" << app.get_subcommand(args[0])->help();
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "dataforge: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (action) action();
    return kExitOk;
  } catch (const IoError& e) {
    err << "dataforge " << args[0] << ": " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "dataforge " << args[0] << ": " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "dataforge " << args[0] << ": " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "dataforge " << args[0] << ": " << e.what() << "\n";
    return kExitValidation;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace dataforge::cli
