#include <doctest.h>

#include <string>

#include "generators.hpp"
#include "mathsearch/canon.hpp"
#include "mathsearch/texparse.hpp"

using namespace mathsearch;

namespace {

Expr id(const char* n) { return Expr::identifier(n); }
Expr num(const char* v) { return Expr::number(v); }
Expr wild(const char* n) { return Expr::wildcard(n); }
Expr ap(Op op, std::vector<Expr> args) { return Expr::apply(op, std::move(args)); }
Expr sub(Expr b, Expr i) { return ap(Op::Subscript, {std::move(b), std::move(i)}); }
Expr pw(Expr b, Expr e) { return ap(Op::Power, {std::move(b), std::move(e)}); }

ParseError error_of(std::string_view src, bool query = false) {
  try {
    if (query) parse_query(src);
    else parse_formula(src);
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("expected a parse error for " << src);
  return ParseError(0, ParseErrorKind::EmptyInput, "");
}

}  // namespace

TEST_SUITE("texparse") {
  TEST_CASE("Bell congruence") {
    const Expr lhs = sub(id("B"), ap(Op::Plus, {id("p"), id("n")}));
    const Expr rhs = ap(Op::Mod, {ap(Op::Plus, {sub(id("B"), id("n")), sub(id("B"), ap(Op::Plus, {id("n"), num("1")}))}),
                                  id("p")});
    const Expr tail = ap(Op::Sequence, {Expr::text("for all"), ap(Op::Eq, {id("n"), num("0")}), num("1"), num("2"),
                                        ap(Op::Ellipsis, {})});
    const Expr expected = ap(Op::Annotate, {ap(Op::Eq, {lhs, rhs}), tail});
    CHECK(parse_formula("B_{p+n} = B_n + B_{n+1} \\bmod p \\ \\text{for all}\\ n=0,1,2,\\dots") == expected);
  }

  TEST_CASE("perturbed-system equation") {
    const Expr expected = ap(
        Op::Eq, {sub(id("p"), num("1")),
                 ap(Op::Plus, {ap(Op::Times, {id("a"), pw(sub(id("x"), num("1")), num("2"))}),
                               ap(Op::Times, {id("b"), pw(sub(id("x"), num("2")), num("2"))}),
                               ap(Op::Times, {sub(id("epsilon"), num("1")), sub(id("x"), num("1")),
                                              sub(id("y"), num("1"))})})});
    CHECK(parse_formula("p_1=ax_1^2+bx_2^2+\\epsilon_1x_1y_1") == expected);
  }

  TEST_CASE("perturbed-system query and simple queries") {
    const Expr expected = ap(Op::Plus, {ap(Op::Times, {id("a"), pw(wild("x"), num("2"))}),
                                        ap(Op::Times, {id("b"), pw(wild("y"), num("2"))}), wild("z")});
    CHECK(parse_query("a?x^2+b?y^2+?z") == expected);
    CHECK(parse_query("?w") == wild("w"));
    CHECK(parse_query("B_{p+n}") == sub(id("B"), ap(Op::Plus, {id("p"), id("n")})));
    CHECK(parse_formula("x") == id("x"));
  }

  TEST_CASE("precedence") {
    CHECK(parse_formula("x_1^2") == pw(sub(id("x"), num("1")), num("2")));
    CHECK(parse_formula("x^2_1") == pw(sub(id("x"), num("1")), num("2")));
    CHECK(parse_formula("a+b \\bmod p") == ap(Op::Mod, {ap(Op::Plus, {id("a"), id("b")}), id("p")}));
    CHECK(parse_formula("a+b c") == ap(Op::Plus, {id("a"), ap(Op::Times, {id("b"), id("c")})}));
    CHECK(parse_formula("a-b-c") == ap(Op::Minus, {ap(Op::Minus, {id("a"), id("b")}), id("c")}));
    CHECK(parse_formula("-x^2") == ap(Op::Negate, {pw(id("x"), num("2"))}));
    CHECK(parse_formula("a=b=c") == ap(Op::Eq, {id("a"), id("b"), id("c")}));
    CHECK(parse_formula("a, b = c") == ap(Op::Sequence, {id("a"), ap(Op::Eq, {id("b"), id("c")})}));
    CHECK(parse_formula("a/b") == ap(Op::Divide, {id("a"), id("b")}));
    CHECK(parse_formula("a \\cdot b \\times c * d") == ap(Op::Times, {id("a"), id("b"), id("c"), id("d")}));
    CHECK(parse_formula("(a+b)c") == ap(Op::Times, {ap(Op::Plus, {id("a"), id("b")}), id("c")}));
  }

  TEST_CASE("atoms and commands") {
    CHECK(parse_formula("\\frac{a}{b}") == ap(Op::Divide, {id("a"), id("b")}));
    CHECK(parse_formula("\\sqrt{a}") == Expr::function("sqrt", {id("a")}));
    CHECK(parse_formula("\\sin x") == Expr::function("sin", {id("x")}));
    CHECK(parse_formula("\\log(xy)") == Expr::function("log", {ap(Op::Times, {id("x"), id("y")})}));
    CHECK(parse_formula("\\sin^2 x") == pw(Expr::function("sin", {id("x")}), num("2")));
    CHECK(parse_formula("2.50") == num("2.50"));
    CHECK(parse_formula("12x") == ap(Op::Times, {num("12"), id("x")}));
    CHECK(parse_formula("\\Gamma") == id("Gamma"));
    CHECK(parse_formula("\\ldots") == ap(Op::Ellipsis, {}));
    CHECK(parse_formula("\\cdots") == ap(Op::Ellipsis, {}));
    CHECK(parse_formula("a~\\,b\\;c\\quad d") == ap(Op::Times, {id("a"), id("b"), id("c"), id("d")}));
    CHECK(parse_formula("x \\text{if}") == ap(Op::Annotate, {id("x"), Expr::text("if")}));
    CHECK(parse_formula("a \\pmod{m}") == ap(Op::Mod, {id("a"), id("m")}));
    CHECK(is_greek_name("epsilon"));
    CHECK_FALSE(is_greek_name("sin"));
  }

  TEST_CASE("errors carry kind and position") {
    auto e = error_of("a?x^2+b?(", true);
    CHECK(e.kind() == ParseErrorKind::UnexpectedToken);
    CHECK(e.position() == 8);

    e = error_of("\\unknowncmd");
    CHECK(e.kind() == ParseErrorKind::UnknownCommand);
    CHECK(e.position() == 0);
    CHECK(std::string(e.what()).rfind("0: unknown-command: ", 0) == 0);

    e = error_of("");
    CHECK(e.kind() == ParseErrorKind::EmptyInput);
    CHECK(e.position() == 0);
    e = error_of("   ");
    CHECK(e.kind() == ParseErrorKind::EmptyInput);
    CHECK(e.position() == 3);

    e = error_of("{a+b");
    CHECK(e.kind() == ParseErrorKind::UnbalancedBrace);
    CHECK(e.position() == 0);
    e = error_of("a+b)");
    CHECK(e.kind() == ParseErrorKind::UnbalancedBrace);
    CHECK(e.position() == 3);

    e = error_of("?x");
    CHECK(e.kind() == ParseErrorKind::UnexpectedToken);
    CHECK(e.position() == 0);

    CHECK(error_of("x_1_2").kind() == ParseErrorKind::UnexpectedToken);
    CHECK(error_of("a+").position() == 2);
    CHECK(error_of("\\frac{a}{").kind() == ParseErrorKind::UnbalancedBrace);
    CHECK(error_of("\\equiv").kind() == ParseErrorKind::UnknownCommand);

    const Json j = error_of("a+").to_json();
    CHECK(j.dump() == R"({"position":2,"kind":"unexpected-token","message":"unexpected end of input"})");
  }

  TEST_CASE("deep nesting fails cleanly") {
    std::string deep(5000, '(');
    deep += "x" + std::string(5000, ')');
    CHECK(error_of(deep).kind() == ParseErrorKind::UnexpectedToken);
    std::string fine = std::string(50, '{') + "x" + std::string(50, '}');
    CHECK(parse_formula(fine) == id("x"));
  }

  TEST_CASE("printer examples") {
    CHECK(to_latex(parse_formula("x")) == "x");
    CHECK(to_latex(canonicalize(parse_formula("a-b"))) == "-b + a");
    CHECK(to_latex(parse_formula("\\frac{a}{b}")) == "\\frac{a}{b}");
    CHECK(to_latex(parse_query("?x^2")) == "?x^{2}");
  }

  TEST_CASE("round trip: printing a parse reparses to the same tree") {
    mstest::Rng rng(21);
    mstest::TreeShape shape;
    shape.text = true;
    for (int i = 0; i < 20000; ++i) {
      const std::string src = to_latex(mstest::random_tree(rng, shape));
      const Expr t = parse_formula(src);
      const std::string printed = to_latex(t);
      INFO(src << "  =>  " << printed);
      REQUIRE(parse_formula(printed) == t);
      const Expr c = canonicalize(t);
      REQUIRE(canonicalize(parse_formula(to_latex(c))) == c);
      REQUIRE(parse_formula(src) == t);  // deterministic
    }
  }

  TEST_CASE("query round trip keeps wildcards") {
    mstest::Rng rng(22);
    std::vector<Expr> pool;
    for (int i = 0; i < 200; ++i) pool.push_back(mstest::random_formula(rng));
    for (int i = 0; i < 5000; ++i) {
      const Expr p = mstest::random_pattern(rng, pool, {0.4, false, 0.3});
      // A bare -1 only exists as a canonical factor; "-1" reads back as -(1).
      if (p.kind() == NodeKind::Number) continue;
      INFO(to_latex(p));
      REQUIRE(canonicalize(parse_query(to_latex(p))) == p);
    }
  }

  TEST_CASE("fuzz: every input yields a tree or a positioned error") {
    static const std::vector<std::string> pieces{
        "a", "x", "1", "2.5", "+", "-", "*", "/", "=", "^", "_", "{", "}", "(", ")", ",", " ", "?", "?x",
        "\\frac", "\\sqrt", "\\sin", "\\bmod", "\\pmod", "\\text{", "\\text{t}", "\\dots", "\\cdot", "\\alpha",
        "\\", "\\foo", "~", "\\,", "\xc3\xa9", "\xff", "\n", "0", "."};
    mstest::Rng rng(23);
    std::size_t ok = 0, failed = 0;
    for (int i = 0; i < 100000; ++i) {
      std::string src;
      const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 24)(rng);
      if (i % 4 == 0) {
        for (std::size_t k = 0; k < n; ++k) src += static_cast<char>(rng() & 0xff);
      } else {
        for (std::size_t k = 0; k < n; ++k) src += pieces[rng() % pieces.size()];
      }
      const bool query = (i & 1) != 0;
      try {
        Expr e = query ? parse_query(src) : parse_formula(src);
        REQUIRE(node_count(e) >= 1);
        ++ok;
      } catch (const ParseError& e) {
        REQUIRE(e.position() <= src.size());
        ++failed;
      }
    }
    CHECK(ok > 1000);
    CHECK(failed > 1000);
  }
}
