// Reference implementations used as test oracles. Written independently of
// the library: plain recursion over explicit choice lists, no trie, no goal
// stack.

#ifndef MATHSEARCH_TEST_ORACLE_HPP
#define MATHSEARCH_TEST_ORACLE_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mathsearch/expr.hpp"
#include "mathsearch/mathindex.hpp"

namespace mstest {

using mathsearch::Expr;

struct OracleSolution {
  std::map<std::string, Expr> bindings;
  std::map<std::string, std::string> renaming;
};

/// Every solution of matching `pattern` at the root of `subject`, in the
/// exploration order the matcher documents, stopping after `limit`.
std::vector<OracleSolution> all_matches(const Expr& pattern, const Expr& subject, bool alpha,
                                        std::size_t limit = static_cast<std::size_t>(-1));

/// Replaces wildcards by their bindings and pattern identifiers by their
/// renaming targets.
Expr instantiate(const Expr& pattern, const OracleSolution& s);

/// Counts nodes by walking the JSON serialization, not the tree type.
std::size_t json_node_count(const mathsearch::Json& j);

/// Whole-corpus scan with per-formula dedup, scored and sorted, built on
/// all_matches() rather than the library matcher.
std::vector<mathsearch::FormulaHit> oracle_query(const std::vector<mathsearch::IndexedFormula>& formulas,
                                                 const Expr& pattern, bool alpha);

}  // namespace mstest

#endif  // MATHSEARCH_TEST_ORACLE_HPP
