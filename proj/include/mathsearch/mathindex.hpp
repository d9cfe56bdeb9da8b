// Formula index: discrimination trees over every subterm of every indexed
// formula, plus the root matcher that confirms candidates.
//
// Two tries are kept. The exact trie is keyed by TermKey tokens; the alpha
// trie by the same tokens with identifiers renumbered per subterm (`V:<k>`).
// A query walks one of them, letting wildcards skip whole subterms and
// exploring argument assignments at plus/times nodes, and every candidate
// reached is confirmed with match(). The walk never prunes a subterm that
// match() would accept, so query() and brute_force_query() agree exactly.

#ifndef MATHSEARCH_MATHINDEX_HPP
#define MATHSEARCH_MATHINDEX_HPP

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mathsearch/expr.hpp"

namespace mathsearch {

struct FormulaRef {
  std::string doc_id;
  std::uint32_t formula_id = 0;
  Path path;

  auto operator<=>(const FormulaRef&) const = default;
  bool operator==(const FormulaRef&) const = default;
};

/// Wildcard bindings, plus the identifier renaming used in alpha mode
/// (pattern name -> subject name).
struct Substitution {
  std::map<std::string, Expr> bindings;
  std::map<std::string, std::string> renaming;

  bool operator==(const Substitution&) const = default;
};

/// Exact rational score, compared by cross-multiplication.
struct Score {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }

  std::strong_ordering operator<=>(const Score& o) const { return num * o.den <=> o.num * den; }
  bool operator==(const Score& o) const { return num * o.den == o.num * den; }
};

struct FormulaHit {
  FormulaRef ref;
  Substitution substitution;
  Score score;

  bool operator==(const FormulaHit& o) const {
    return ref == o.ref && substitution == o.substitution && score.num == o.score.num &&
           score.den == o.score.den;
  }
};

/// Work counters for one query.
struct QueryStats {
  std::size_t candidates = 0;
  std::size_t confirmations = 0;
};

/// Matches `pattern` against `subject` at the root. Both must be canonical.
///
/// Wildcards bind any subtree, consistently across repeats. plus/times
/// arguments are assigned injectively by backtracking; when the pattern has
/// fewer arguments than the subject and contains a bare wildcard argument,
/// that wildcard may absorb the leftover subject arguments as one plus/times
/// node. With `alpha`, pattern identifiers also match subject identifiers
/// under a consistent injective renaming. The first solution in canonical
/// argument order is returned.
std::optional<Substitution> match(const Expr& pattern, const Expr& subject, bool alpha);

/// Number of non-wildcard nodes of a pattern.
std::size_t concrete_node_count(const Expr& pattern);

/// An indexed formula with its subterm paths in pre-order.
struct IndexedFormula {
  std::string doc_id;
  std::uint32_t formula_id = 0;
  Expr expr;
  std::vector<Path> paths;
};

/// Plain subterm scan: match() at every subterm of every formula.
std::vector<FormulaHit> brute_force_query(std::span<const IndexedFormula> formulas,
                                          const Expr& pattern, bool alpha,
                                          QueryStats* stats = nullptr);

/// Reference to one indexed subterm: formula ordinal and pre-order index.
struct EntryRef {
  std::uint32_t formula = 0;
  std::uint32_t subterm = 0;
  auto operator<=>(const EntryRef&) const = default;
};

class DiscTree {
 public:
  struct Node {
    std::map<std::string, std::uint32_t, std::less<>> next;
    std::vector<EntryRef> refs;  // sorted, unique
  };

  DiscTree() : nodes_(1) {}

  void insert(std::span<const std::string> key, EntryRef ref);

  const Node& node(std::uint32_t id) const { return nodes_[id]; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t entry_count() const;
  std::size_t distinct_key_count() const;

  /// Refs stored under exactly this key.
  std::vector<EntryRef> lookup(std::span<const std::string> key) const;

  Json to_json() const;
  static DiscTree from_json(const Json& j);

 private:
  std::vector<Node> nodes_;
};

class MathIndex {
 public:
  static constexpr std::size_t kMaxCommutativeArity = 16;

  /// Indexes every subterm of a canonical formula. Returns false, changing
  /// nothing, when (doc_id, formula_id) is already present. Throws
  /// std::invalid_argument for non-canonical input, wildcards, or plus/times
  /// nodes wider than kMaxCommutativeArity.
  bool insert(const Expr& formula, const std::string& doc_id, std::uint32_t formula_id);

  std::vector<FormulaHit> query(const Expr& pattern, bool alpha, QueryStats* stats = nullptr) const;

  /// Candidate entries reached by walking the trie, before confirmation.
  std::vector<EntryRef> candidates(const Expr& pattern, bool alpha) const;

  std::vector<FormulaHit> brute_force_query(const Expr& pattern, bool alpha,
                                            QueryStats* stats = nullptr) const {
    return mathsearch::brute_force_query(formulas_, pattern, alpha, stats);
  }

  std::span<const IndexedFormula> formulas() const { return formulas_; }
  std::size_t formula_count() const { return formulas_.size(); }
  std::size_t subterm_count() const;
  const DiscTree& exact_tree() const { return exact_; }
  const DiscTree& alpha_tree() const { return alpha_; }

  Json to_json() const;
  /// Throws std::invalid_argument when the layout is malformed or a stored
  /// entry does not resolve to a subterm.
  static MathIndex from_json(const Json& j);

 private:
  std::vector<IndexedFormula> formulas_;
  std::set<std::pair<std::string, std::uint32_t>> seen_;
  DiscTree exact_;
  DiscTree alpha_;
};

std::size_t max_commutative_arity(const Expr& e);

}  // namespace mathsearch

#endif  // MATHSEARCH_MATHINDEX_HPP
