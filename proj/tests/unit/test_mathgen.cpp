#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>

#include "dataforge/error.hpp"
#include "dataforge/hash.hpp"
#include "dataforge/mathgen/evaluator.hpp"
#include "dataforge/mathgen/generator.hpp"
#include "dataforge/mathgen/parser.hpp"
#include "dataforge/mathgen/printer.hpp"
#include "dataforge/rng.hpp"
#include "oracle.hpp"
#include "synthetic.hpp"

using namespace dataforge;
using namespace dataforge::mathgen;

namespace {

const char* kBaskets =
    "param a in [2,20]; param b in [2,20]; let total = a*b; return total; "
    "question \"Each of {a} baskets holds {b} apples. How many apples in all?\"";

Substitution subst(std::initializer_list<std::pair<const char*, int>> kv) {
  Substitution s;
  for (const auto& [k, v] : kv) s[k] = Rational(v);
  return s;
}

std::string error_of(const std::string& src) {
  try {
    (void)parse_template(src);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

std::map<std::string, mpq_class> to_mpq(const Substitution& s) {
  std::map<std::string, mpq_class> out;
  for (const auto& [k, v] : s) out[k] = dftest::oracle_rational(to_fraction_string(v));
  return out;
}

bool same_value(const Rational& r, const mpq_class& q) {
  return dftest::oracle_rational(to_fraction_string(r)) == q;
}

}  // namespace

TEST_CASE("rationals") {
  CHECK(parse_rational("1.25") == Rational(5, 4));
  CHECK(parse_rational("-7/4") == Rational(-7, 4));
  CHECK(to_fraction_string(Rational(6, 4)) == "3/2");
  CHECK(to_display_string(Rational(5, 4)) == "1.25");
  CHECK(to_display_string(Rational(1, 3)) == "1/3");
  CHECK(floor_div(-7, 2) == -4);
  CHECK(floor_mod(-7, 2) == 1);
  CHECK(floor_mod(7, -2) == -1);
  CHECK_THROWS_AS(parse_rational("1/0"), ValidationError);
  CHECK_THROWS_AS(parse_rational("abc"), ValidationError);
}

TEST_CASE("minimal template") {
  const auto t = parse_template(kBaskets, "baskets");
  CHECK(t.params.size() == 2);
  CHECK(t.lets.size() == 1);
  CHECK(t.constraints.empty());
  CHECK(std::get<IntegerRange>(t.params[0].domain) == IntegerRange{2, 20});
  CHECK(eval_program(t, subst({{"a", 3}, {"b", 4}})) == 12);
  CHECK_THROWS_AS(eval_program(t, subst({{"a", 0}, {"b", 4}})), EvalError);
  CHECK(render_question(t, subst({{"a", 3}, {"b", 4}})) == "Each of 3 baskets holds 4 apples. How many apples in all?");
}

TEST_CASE("parse errors name the problem and the position") {
  const auto e1 = error_of("param a in [1,5]; return a; question \"{c} apples\"");
  CHECK(e1.find("c") != std::string::npos);
  CHECK(e1.find("placeholder") != std::string::npos);
  const auto e2 = error_of("param a in [1,5];\nreturn a + ;\nquestion \"x\"");
  CHECK(e2.rfind("2:", 0) == 0);
  CHECK(error_of("param a in [1,5]; return q; question \"x\"").find("q") != std::string::npos);
  CHECK_FALSE(error_of("param a in [1,5]; constraint a + 1; return a; question \"x\"").empty());
  CHECK(error_of("param a in [1,5]; return a; question \"x\"; original { a: 1 } answer 1").empty());
  CHECK_FALSE(error_of("param a in [1,5]; return a < 2 < 3; question \"x\"").empty());
  CHECK_FALSE(error_of("param a in [1,5]; return a").empty());
}

TEST_CASE("a % b == 0 parses to the expected tree") {
  const auto e = parse_expression("a % b == 0");
  const auto want = make_binary(BinaryOp::eq,
                                make_binary(BinaryOp::mod, make_identifier("a"), make_identifier("b")),
                                make_literal(Rational(0)));
  CHECK(same_tree(*e, *want));
  CHECK(type_of(*e) == ValueType::boolean);
  CHECK(print_expr(*e) == "((a % b) == 0)");
}

TEST_CASE("evaluation semantics") {
  const Substitution env = subst({{"x", 7}, {"y", -2}, {"z", 0}});
  CHECK(evaluate_number(*parse_expression("x // y"), env) == -4);
  CHECK(evaluate_number(*parse_expression("x % y"), env) == -1);
  CHECK(evaluate_number(*parse_expression("x / y"), env) == Rational(-7, 2));
  CHECK(evaluate_number(*parse_expression("-x + 2 * 3"), env) == -1);
  CHECK(evaluate_number(*parse_expression("1.5 * 2"), env) == 3);
  CHECK(evaluate_bool(*parse_expression("not x < y or z == 0 and x != 7"), env));
  try {
    (void)evaluate_number(*parse_expression("x / z"), env);
    FAIL("expected division by zero");
  } catch (const EvalError& e) {
    CHECK(e.kind() == EvalError::Kind::division_by_zero);
    CHECK(std::string(e.what()).find("(x / z)") != std::string::npos);
  }
  try {
    (void)evaluate_number(*parse_expression("x / 2 // 1"), env);
    FAIL("expected a non-integer error");
  } catch (const EvalError& e) {
    CHECK(e.kind() == EvalError::Kind::non_integer);
  }
}

TEST_CASE("instantiation") {
  const auto t = parse_template(kBaskets, "baskets");
  const auto r = instantiate(t, 5, 10);
  const auto& qa = std::get<QAInstance>(r);
  CHECK(qa.attempts == 1);
  CHECK(qa.answer == qa.substitution.at("a") * qa.substitution.at("b"));
  // same key, same instance
  CHECK(std::get<QAInstance>(instantiate(t, 5, 10)).substitution == qa.substitution);

  const auto never = parse_template("param a in [1,10]; constraint a > 100; return a; question \"{a}\"", "never");
  const auto ex = std::get<Exhaustion>(instantiate(never, 1, 50));
  CHECK(ex.attempts == 50);
  CHECK(ex.last_failure.find("(a > 100)") != std::string::npos);
}

TEST_CASE("divisibility acceptance matches enumeration") {
  int valid = 0;
  for (int a = 1; a <= 10; ++a)
    for (int b = 1; b <= 10; ++b) valid += a % b == 0;
  CHECK(valid == 27);
  const auto t = parse_template("param a in [1,10]; param b in [1,10]; constraint a % b == 0; return a // b; "
                                "question \"{a} {b}\"",
                                "div");
  auto rng = Rng::keyed({42});
  int ok = 0;
  for (int i = 0; i < 10'000; ++i) ok += rejection_reason(t, sample_substitution(t, rng)).empty();
  CHECK(std::abs(ok / 10'000.0 - valid / 100.0) <= 0.02);
}

TEST_CASE("faithfulness gate") {
  const std::string base = std::string(kBaskets) + "; original { a: 3, b: 4 } answer ";
  const auto good = parse_template(base + "12", "good");
  CHECK(faithfulness_diagnostic(good).empty());
  const auto bad = parse_template(base + "13", "bad");
  CHECK_FALSE(faithfulness_diagnostic(bad).empty());
  const std::vector<MathTemplate> ts{good, bad};
  const auto res = expand_dataset(ts, 5, 1);
  CHECK(res.instances.size() == 5);
  CHECK(res.stats[1].rejected);
  CHECK(res.stats[1].emitted == 0);
  for (const auto& qa : res.instances) CHECK(eval_program(good, qa.substitution) == qa.answer);
}

TEST_CASE("parse, print, parse gives the same template") {
  for (const auto& t : load_template_dir(DATAFORGE_ASSET_DIR "/templates")) {
    const auto printed = print_template(t);
    const auto again = parse_template(printed, t.name);
    CHECK_MESSAGE(same_template(t, again), t.name);
    CHECK(print_template(again) == printed);
  }
}

TEST_CASE("random expressions survive printing") {
  Rng rng(2024);
  const char* names[] = {"a", "b", "c"};
  std::function<ExprPtr(int)> gen = [&](int depth) -> ExprPtr {
    if (depth == 0 || rng.below(4) == 0) {
      if (rng.below(2)) return make_identifier(names[rng.below(3)]);
      // only values the grammar can spell as one literal
      const long dens[] = {1, 2, 4, 5};
      return make_literal(Rational(static_cast<long>(rng.below(50)), dens[rng.below(4)]));
    }
    if (rng.below(6) == 0) return make_unary(UnaryOp::negate, gen(depth - 1));
    const BinaryOp ops[] = {BinaryOp::add, BinaryOp::sub, BinaryOp::mul, BinaryOp::div, BinaryOp::floordiv, BinaryOp::mod};
    return make_binary(ops[rng.below(6)], gen(depth - 1), gen(depth - 1));
  };
  for (int i = 0; i < 500; ++i) {
    const auto e = gen(5);
    const auto back = parse_expression(print_expr(*e));
    CHECK(same_tree(*e, *back));
  }
}

TEST_CASE("library evaluator agrees with the GMP oracle on 1,000 substitutions per template") {
  for (const auto& entry : std::filesystem::directory_iterator(DATAFORGE_ASSET_DIR "/templates")) {
    std::ifstream in(entry.path());
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto t = parse_template(text, entry.path().stem().string());
    const dftest::OracleProgram oracle(text);
    auto rng = Rng::keyed({7, fnv1a64(t.name)});
    for (int i = 0; i < 1000; ++i) {
      const auto s = sample_substitution(t, rng);
      const auto ref = oracle.run(to_mpq(s));
      std::optional<Rational> mine;
      try {
        mine = eval_program(t, s);
      } catch (const EvalError&) {
      }
      REQUIRE(mine.has_value() == ref.answer.has_value());
      if (mine) CHECK(same_value(*mine, *ref.answer));
      CHECK(rejection_reason(t, s).empty() == ref.constraints_hold);
    }
  }
}

TEST_CASE("template files") {
  dftest::ScratchDir tmp("templates");
  {
    std::ofstream(tmp.path / "broken.tmpl") << "param a in [1,5];\nreturn b;\nquestion \"x\"";
  }
  try {
    (void)load_template_file(tmp.path / "broken.tmpl");
    FAIL("expected a parse error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("broken.tmpl") != std::string::npos);
    CHECK(msg.find("2:") != std::string::npos);
  }
  CHECK(load_template_dir(DATAFORGE_ASSET_DIR "/templates").size() == 10);
}
