#include "dataforge/mathgen/generator.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include "dataforge/hash.hpp"
#include "dataforge/mathgen/evaluator.hpp"
#include "dataforge/mathgen/parser.hpp"
#include "dataforge/mathgen/printer.hpp"

namespace dataforge::mathgen {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json big_to_json(const BigInt& v) {
  if (v >= std::numeric_limits<std::int64_t>::min() && v <= std::numeric_limits<std::int64_t>::max()) {
    return v.convert_to<std::int64_t>();
  }
  return v.str();
}

Rational draw(const Domain& d, Rng& rng) {
  if (const auto* r = std::get_if<IntegerRange>(&d)) {
    const BigInt span = r->hi - r->lo;
    if (span <= BigInt(std::numeric_limits<std::int64_t>::max())) {
      return Rational(r->lo + BigInt(rng.below(span.convert_to<std::uint64_t>() + 1)));
    }
    // Wide ranges: rejection over 64-bit limbs.
    const unsigned bits = boost::multiprecision::msb(span) + 1;
    for (;;) {
      BigInt v = 0;
      for (unsigned got = 0; got < bits; got += 64) v = (v << 64) | BigInt(rng.next());
      v &= (BigInt(1) << bits) - 1;
      if (v <= span) return Rational(r->lo + v);
    }
  }
  const auto& vs = std::get<ValueSet>(d).values;
  return vs[rng.below(vs.size())];
}

}  // namespace

json QAInstance::to_json() const {
  json subst = json::object();
  for (const auto& [k, v] : substitution) subst[k] = to_fraction_string(v);
  return {{"template", template_name},
          {"substitution", std::move(subst)},
          {"question", question},
          {"answer_num", big_to_json(boost::multiprecision::numerator(answer))},
          {"answer_den", big_to_json(boost::multiprecision::denominator(answer))}};
}

Substitution sample_substitution(const MathTemplate& t, Rng& rng) {
  Substitution s;
  for (const auto& p : t.params) s.emplace(p.name, draw(p.domain, rng));
  return s;
}

std::string render_question(const MathTemplate& t, const Substitution& subst) {
  const auto& q = t.question;
  std::string out;
  for (std::size_t k = 0; k < q.size(); ++k) {
    if ((q[k] == '{' || q[k] == '}') && k + 1 < q.size() && q[k + 1] == q[k]) {
      out.push_back(q[k]);
      ++k;
      continue;
    }
    if (q[k] == '{') {
      const auto close = q.find('}', k);
      const auto name = q.substr(k + 1, close - k - 1);
      out += to_display_string(subst.at(name));
      k = close;
      continue;
    }
    out.push_back(q[k]);
  }
  return out;
}

std::string rejection_reason(const MathTemplate& t, const Substitution& subst) {
  Substitution env = subst;
  try {
    const auto check_ready = [&](std::size_t lets_done) -> std::string {
      for (const auto& c : t.constraints) {
        if (c.ready_after == lets_done && !evaluate_bool(*c.expr, env)) return "constraint " + print_expr(*c.expr);
      }
      return {};
    };
    if (auto r = check_ready(0); !r.empty()) return r;
    for (std::size_t i = 0; i < t.lets.size(); ++i) {
      env[t.lets[i].name] = evaluate_number(*t.lets[i].value, env);
      if (auto r = check_ready(i + 1); !r.empty()) return r;
    }
    (void)evaluate_number(*t.result, env);
  } catch (const EvalError& e) {
    return std::string("evaluation: ") + e.what();
  }
  return {};
}

std::variant<QAInstance, Exhaustion> instantiate(const MathTemplate& t, std::uint64_t seed, std::size_t max_attempts,
                                                 std::size_t instance) {
  if (max_attempts < 1) throw ValidationError("max_attempts must be >= 1");
  const std::uint64_t name_key = fnv1a64(t.name);
  std::string last;
  for (std::size_t a = 0; a < max_attempts; ++a) {
    Rng rng = Rng::keyed({seed, name_key, instance, a});
    Substitution s = sample_substitution(t, rng);
    last = rejection_reason(t, s);
    if (!last.empty()) continue;
    QAInstance qa;
    qa.template_name = t.name;
    qa.answer = eval_program(t, s);
    qa.question = render_question(t, s);
    qa.substitution = std::move(s);
    qa.attempts = a + 1;
    return qa;
  }
  return Exhaustion{t.name, max_attempts, last};
}

std::string faithfulness_diagnostic(const MathTemplate& t) {
  if (!t.original_values) return {};
  try {
    const Rational got = eval_program_unchecked(t, *t.original_values);
    if (t.original_answer && got != *t.original_answer) {
      return "program gives " + to_fraction_string(got) + " under the original values, expected " +
             to_fraction_string(*t.original_answer);
    }
  } catch (const EvalError& e) {
    return std::string("program fails under the original values: ") + e.what();
  }
  return {};
}

ExpansionResult expand_dataset(std::span<const MathTemplate> templates, std::size_t per_template, std::uint64_t seed,
                               std::size_t max_attempts) {
  ExpansionResult out;
  for (const auto& t : templates) {
    TemplateStats st;
    st.name = t.name;
    if (auto diag = faithfulness_diagnostic(t); !diag.empty()) {
      st.rejected = true;
      st.reason = std::move(diag);
      out.stats.push_back(std::move(st));
      continue;
    }
    for (std::size_t i = 0; i < per_template; ++i) {
      auto r = instantiate(t, seed, max_attempts, i);
      if (auto* qa = std::get_if<QAInstance>(&r)) {
        st.attempts += qa->attempts;
        ++st.emitted;
        out.instances.push_back(std::move(*qa));
      } else {
        const auto& ex = std::get<Exhaustion>(r);
        st.attempts += ex.attempts;
        ++st.exhausted;
        st.reason = ex.last_failure;
      }
    }
    out.stats.push_back(std::move(st));
  }
  return out;
}

json ExpansionResult::stats_json() const {
  json arr = json::array();
  for (const auto& s : stats) {
    arr.push_back({{"template", s.name},
                   {"emitted", s.emitted},
                   {"exhausted", s.exhausted},
                   {"attempts", s.attempts},
                   {"rejected", s.rejected},
                   {"reason", s.reason}});
  }
  return {{"templates", std::move(arr)}, {"instances", instances.size()}};
}

void write_jsonl(const fs::path& path, std::span<const QAInstance> instances) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& qa : instances) out << qa.to_json().dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

MathTemplate load_template_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_template(ss.str(), path.stem().string());
  } catch (const ParseError& e) {
    throw ValidationError(path.filename().string() + ":" + e.what());
  }
}

std::vector<MathTemplate> load_template_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".tmpl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<MathTemplate> out;
  for (const auto& f : files) out.push_back(load_template_file(f));
  return out;
}

}  // namespace dataforge::mathgen
