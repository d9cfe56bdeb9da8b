// Combined text + formula search over a loaded snapshot.
//
// Text-only queries rank by BM25. Math-only queries group formula hits by
// document. When both parts are given, only documents that satisfy the text
// query and contain at least one matching formula are returned.

#ifndef MATHSEARCH_ENGINE_HPP
#define MATHSEARCH_ENGINE_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mathsearch/corpus.hpp"
#include "mathsearch/texparse.hpp"

namespace mathsearch {

inline constexpr std::size_t kSnippetWidth = 160;

struct CombinedQuery {
  std::optional<std::string> text;
  std::optional<std::string> math;
  bool alpha = false;
  std::size_t limit = 10;
};

using LatexPairs = std::vector<std::pair<std::string, std::string>>;

struct RenderedHit {
  std::uint32_t formula_id = 0;
  Path path;
  Score score;
  std::string latex;          // matched subterm, printed from the canonical tree
  std::string formula_latex;  // verbatim source of the whole formula
  LatexPairs substitution;    // wildcard name -> latex of its binding
  LatexPairs renaming;        // alpha mode: pattern identifier -> subject identifier
};

struct DocResult {
  std::string doc_id;
  std::string title;
  std::optional<double> text_score;
  std::string snippet;
  std::vector<RenderedHit> formula_hits;
};

struct SearchTimings {
  double text_ms = 0;
  double math_ms = 0;
};

struct SearchResponse {
  std::vector<DocResult> results;
  std::size_t total = 0;  // matching documents before truncation to limit
  SearchTimings timings;
};

enum class QueryErrorKind { EmptyQuery, InvalidLimit, MathParse };

class QueryError : public std::runtime_error {
 public:
  QueryError(QueryErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  explicit QueryError(const ParseError& e)
      : std::runtime_error(e.what()), kind_(QueryErrorKind::MathParse), parse_(e) {}

  QueryErrorKind kind() const { return kind_; }
  const std::optional<ParseError>& parse_error() const { return parse_; }
  Json to_json() const;

 private:
  QueryErrorKind kind_;
  std::optional<ParseError> parse_;
};

/// Blank or whitespace-only parts count as absent. Throws QueryError.
SearchResponse search(const Snapshot& snapshot, const CombinedQuery& q);

/// {"results": [...], "total": n, "timings": {"text_ms", "math_ms"}}
Json to_json(const SearchResponse& response);
Json to_json(const DocResult& result);

/// Serialized form shared by `query --json` and POST /api/search.
std::string response_body(const SearchResponse& response);
std::string json_body(const Json& j);

}  // namespace mathsearch

#endif  // MATHSEARCH_ENGINE_HPP
