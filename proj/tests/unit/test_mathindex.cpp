#include <doctest.h>

#include <algorithm>
#include <set>

#include "generators.hpp"
#include "mathsearch/canon.hpp"
#include "mathsearch/mathindex.hpp"
#include "mathsearch/texparse.hpp"
#include "oracle.hpp"

using namespace mathsearch;

namespace {

Expr id(const char* n) { return Expr::identifier(n); }
Expr ap(Op op, std::vector<Expr> args) { return Expr::apply(op, std::move(args)); }
Expr formula(const char* src) { return canonicalize(parse_formula(src)); }
Expr pattern(const char* src) { return canonicalize(parse_query(src)); }

constexpr const char* kFig2 = "p_1=ax_1^2+bx_2^2+\\epsilon_1x_1y_1";

std::map<std::string, std::string> printed(const Substitution& s) {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : s.bindings) out[k] = to_latex(v);
  return out;
}

Expr apply_solution(const Expr& p, const Substitution& s) {
  return mstest::instantiate(p, mstest::OracleSolution{s.bindings, s.renaming});
}

// Drops formulas wider than the index accepts, then indexes the rest.
MathIndex index_of(std::vector<Expr>& formulas) {
  std::erase_if(formulas, [](const Expr& f) { return max_commutative_arity(f) > MathIndex::kMaxCommutativeArity; });
  MathIndex idx;
  for (std::size_t i = 0; i < formulas.size(); ++i) {
    idx.insert(formulas[i], "d" + std::to_string(i / 3), static_cast<std::uint32_t>(i % 3));
  }
  return idx;
}

}  // namespace

TEST_SUITE("mathindex") {
  TEST_CASE("quadratic pattern against the perturbed system") {
    const Expr p = pattern("a?x^2+b?y^2+?z");
    const Expr rhs = canonicalize(parse_formula(kFig2).args()[1]);
    const auto s = match(p, rhs, false);
    REQUIRE(s);
    CHECK(printed(*s) == std::map<std::string, std::string>{
                             {"x", "x_{1}"}, {"y", "x_{2}"}, {"z", "\\epsilon_{1} x_{1} y_{1}"}});
    CHECK(s->renaming.empty());
    CHECK(canonicalize(apply_solution(p, *s)) == rhs);
  }

  TEST_CASE("wildcards, repeats and absorption") {
    CHECK(match(pattern("?w"), formula("x+y"), false));
    CHECK(match(pattern("?x+?x"), formula("a+a"), false));
    CHECK_FALSE(match(pattern("?x+?x"), formula("a+b"), false));
    REQUIRE(match(pattern("a+?z"), formula("a+b+c"), false));
    CHECK(to_latex(match(pattern("a+?z"), formula("a+b+c"), false)->bindings.at("z")) == "b + c");
    CHECK_FALSE(match(pattern("a+b"), formula("a+b+c"), false));
    CHECK_FALSE(match(pattern("?x^2"), formula("x^3"), false));
    CHECK(match(pattern("\\sin ?x"), formula("\\sin(a+b)"), false));
    CHECK_FALSE(match(pattern("\\sin ?x"), formula("\\cos(a+b)"), false));
    // Wildcards never absorb into a non-commutative node.
    CHECK_FALSE(match(pattern("?x=?y"), formula("a=b=c"), false));
  }

  TEST_CASE("alpha mode renames identifiers injectively") {
    const Expr b = pattern("B_{p+n}");
    const Expr c = formula("C_{q+m}");
    CHECK_FALSE(match(b, c, false));
    const auto s = match(b, c, true);
    REQUIRE(s);
    CHECK(s->renaming == std::map<std::string, std::string>{{"B", "C"}, {"n", "m"}, {"p", "q"}});
    CHECK(match(pattern("x+y"), formula("a+b"), true));
    CHECK_FALSE(match(pattern("x+y"), formula("a+a"), true));
    CHECK_FALSE(match(pattern("x+x"), formula("a+b"), true));
    // Numbers and heads are not renamed.
    CHECK_FALSE(match(pattern("x+1"), formula("a+2"), true));
    CHECK_FALSE(match(pattern("\\sin x"), formula("\\cos x"), true));
  }

  TEST_CASE("matcher agrees with the oracle") {
    mstest::Rng rng(41);
    std::size_t matched = 0;
    for (int i = 0; i < 4000; ++i) {
      const bool alpha = (i & 1) != 0;
      std::vector<Expr> pool;
      for (int k = 0; k < 4; ++k) pool.push_back(mstest::random_formula(rng));
      const Expr p = mstest::random_pattern(rng, pool, {0.3, alpha, 0.3});
      for (const Expr& f : pool) {
        for (const auto& st : subterms(f)) {
          const Expr& s = *st.node;
          const auto got = match(p, s, alpha);
          const auto want = mstest::all_matches(p, s, alpha, 1);
          INFO(to_latex(p) << "  vs  " << to_latex(s) << " alpha=" << alpha);
          REQUIRE(got.has_value() == !want.empty());
          if (!got) continue;
          ++matched;
          REQUIRE(got->bindings == want[0].bindings);
          REQUIRE(got->renaming == want[0].renaming);
          REQUIRE(canonicalize(apply_solution(p, *got)) == s);
        }
      }
    }
    CHECK(matched > 4000);
  }

  TEST_CASE("insert indexes every subterm") {
    MathIndex idx;
    CHECK(idx.insert(formula("a+b"), "d", 0));
    CHECK(idx.exact_tree().entry_count() == 3);
    CHECK(idx.subterm_count() == 3);
    const std::vector<std::string> key{"A:plus:2", "I:a", "I:b"};
    CHECK(idx.exact_tree().lookup(key) == std::vector<EntryRef>{{0, 0}});
    CHECK(idx.exact_tree().lookup(std::vector<std::string>{"I:b"}) == std::vector<EntryRef>{{0, 2}});
    CHECK_FALSE(idx.insert(formula("x"), "d", 0));
    CHECK(idx.formula_count() == 1);

    const Expr bell = formula("B_{p+n} = B_n + B_{n+1} \\bmod p \\ \\text{for all}\\ n=0,1,2,\\dots");
    CHECK(idx.insert(bell, "bell", 0));
    CHECK(idx.exact_tree().entry_count() == 3 + 26);
    CHECK(idx.alpha_tree().entry_count() == 3 + 26);
  }

  TEST_CASE("insert rejects bad input") {
    MathIndex idx;
    CHECK_THROWS_AS(idx.insert(pattern("?x+1"), "d", 0), std::invalid_argument);
    CHECK_THROWS_AS(idx.insert(ap(Op::Plus, {id("b"), id("a")}), "d", 1), std::invalid_argument);
    std::vector<Expr> wide;
    for (int i = 0; i < 17; ++i) wide.push_back(Expr::identifier("v" + std::to_string(100 + i)));
    CHECK_THROWS_AS(idx.insert(canonicalize(ap(Op::Plus, wide)), "d", 2), std::invalid_argument);
    wide.pop_back();
    CHECK(idx.insert(canonicalize(ap(Op::Plus, wide)), "d", 3));
    CHECK(idx.formula_count() == 1);
  }

  TEST_CASE("scores and dedup") {
    MathIndex idx;
    const Expr fig2 = formula(kFig2);
    idx.insert(fig2, "poly", 0);
    auto hits = idx.query(pattern("a?x^2+b?y^2+?z"), false);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].ref.path == Path{1});
    CHECK(hits[0].score.num == 9);
    CHECK(hits[0].score.den == 29);

    // ?w matches every subterm; one hit per formula, at the root.
    hits = idx.query(pattern("?w"), false);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].ref.path.empty());
    CHECK(hits[0].score.num == 0);

    // Self-retrieval scores 1.
    hits = idx.query(fig2, false);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].score == Score{1, 1});
  }

  TEST_CASE("index query, brute force and oracle agree on random corpora") {
    mstest::Rng rng(42);
    for (int corpus = 0; corpus < 6; ++corpus) {
      std::vector<Expr> formulas;
      for (int i = 0; i < 60; ++i) formulas.push_back(mstest::random_formula(rng));
      const MathIndex idx = index_of(formulas);
      const std::vector<IndexedFormula> listed(idx.formulas().begin(), idx.formulas().end());
      for (int q = 0; q < 40; ++q) {
        const bool alpha = (q & 1) != 0;
        const Expr p = mstest::random_pattern(rng, formulas, {0.3, alpha, 0.3});
        INFO(to_latex(p) << " alpha=" << alpha);
        QueryStats stats;
        const auto got = idx.query(p, alpha, &stats);
        REQUIRE(got == idx.brute_force_query(p, alpha));
        REQUIRE(got == mstest::oracle_query(listed, p, alpha));
        CHECK(stats.confirmations <= stats.candidates);

        std::set<std::pair<std::uint32_t, std::uint32_t>> reached;
        for (const auto& e : idx.candidates(p, alpha)) reached.insert({e.formula, e.subterm});
        for (const auto& h : got) {
          std::uint32_t ordinal = 0;
          while (listed[ordinal].doc_id != h.ref.doc_id || listed[ordinal].formula_id != h.ref.formula_id) ++ordinal;
          const auto& paths = listed[ordinal].paths;
          const auto at = std::find(paths.begin(), paths.end(), h.ref.path) - paths.begin();
          REQUIRE(reached.count({ordinal, static_cast<std::uint32_t>(at)}) == 1);
        }
      }
    }
  }

  TEST_CASE("every formula retrieves itself with score 1") {
    mstest::Rng rng(43);
    std::vector<Expr> formulas;
    for (int i = 0; i < 150; ++i) formulas.push_back(mstest::random_formula(rng));
    const MathIndex idx = index_of(formulas);
    for (std::size_t i = 0; i < formulas.size(); ++i) {
      for (bool alpha : {false, true}) {
        const auto hits = idx.query(formulas[i], alpha);
        const auto it = std::find_if(hits.begin(), hits.end(), [&](const FormulaHit& h) {
          return h.ref.doc_id == "d" + std::to_string(i / 3) && h.ref.formula_id == i % 3;
        });
        REQUIRE(it != hits.end());
        CHECK(it->ref.path.empty());
        CHECK(it->score == Score{1, 1});
        CHECK(hits.front().score == Score{1, 1});
      }
    }
  }

  TEST_CASE("json round trip") {
    mstest::Rng rng(44);
    std::vector<Expr> formulas;
    for (int i = 0; i < 90; ++i) formulas.push_back(mstest::random_formula(rng));
    const MathIndex idx = index_of(formulas);
    const Json j = idx.to_json();
    const MathIndex back = MathIndex::from_json(Json::parse(j.dump()));
    CHECK(back.to_json() == j);
    CHECK(back.formula_count() == idx.formula_count());
    for (int q = 0; q < 30; ++q) {
      const Expr p = mstest::random_pattern(rng, formulas, {0.3, (q & 1) != 0, 0.3});
      CHECK(back.query(p, (q & 1) != 0) == idx.query(p, (q & 1) != 0));
    }
  }

  TEST_CASE("malformed index json is rejected") {
    MathIndex idx;
    idx.insert(formula("a+b"), "d", 0);
    Json j = idx.to_json();
    CHECK_NOTHROW(MathIndex::from_json(j));
    Json broken = j;
    broken.erase("formulas");
    CHECK_THROWS_AS(MathIndex::from_json(broken), std::invalid_argument);
    CHECK_THROWS_AS(MathIndex::from_json(Json::array()), std::invalid_argument);
  }

  TEST_CASE("disc tree basics") {
    DiscTree t;
    const std::vector<std::string> k1{"A:plus:2", "I:a", "I:b"};
    const std::vector<std::string> k2{"A:plus:2", "I:a", "I:c"};
    t.insert(k1, {0, 0});
    t.insert(k1, {1, 0});
    t.insert(k1, {0, 0});
    t.insert(k2, {2, 3});
    CHECK(t.entry_count() == 3);
    CHECK(t.distinct_key_count() == 2);
    CHECK(t.lookup(k1) == std::vector<EntryRef>{{0, 0}, {1, 0}});
    CHECK(t.lookup(std::vector<std::string>{"A:plus:2"}).empty());
    CHECK(DiscTree::from_json(t.to_json()).to_json() == t.to_json());
  }

  TEST_CASE("score ordering is exact") {
    CHECK(Score{1, 3} < Score{1, 2});
    CHECK(Score{2, 4} == Score{1, 2});
    CHECK(Score{9, 29}.str() == "9/29");
    CHECK(concrete_node_count(pattern("a?x^2+b?y^2+?z")) == 9);
    CHECK(concrete_node_count(pattern("?w")) == 0);
  }
}
