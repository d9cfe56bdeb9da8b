#include "mathsearch/engine.hpp"

#include <algorithm>
#include <chrono>
#include <map>

namespace mathsearch {

namespace {

bool blank(const std::optional<std::string>& s) {
  return !s || s->find_first_not_of(" \t\r\n") == std::string::npos;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

RenderedHit render_hit(const Document& doc, const FormulaHit& hit) {
  const Formula* f = doc.formula(hit.ref.formula_id);
  const Expr* sub = f ? subterm_at(f->expr, hit.ref.path) : nullptr;
  RenderedHit r;
  r.formula_id = hit.ref.formula_id;
  r.path = hit.ref.path;
  r.score = hit.score;
  if (sub) r.latex = to_latex(*sub);
  if (f) r.formula_latex = f->latex;
  for (const auto& [name, value] : hit.substitution.bindings) r.substitution.emplace_back(name, to_latex(value));
  for (const auto& [from, to] : hit.substitution.renaming) r.renaming.emplace_back(from, to);
  return r;
}

struct MathGroup {
  std::vector<const FormulaHit*> hits;  // score desc, as reported by the index
  Score best;
};

Json pairs_json(const LatexPairs& pairs) {
  Json arr = Json::array();
  for (const auto& [a, b] : pairs) arr.push_back(Json::array({a, b}));
  return arr;
}

}  // namespace

Json QueryError::to_json() const {
  if (parse_) return Json{{"error", parse_->to_json()}};
  Json err = Json::object();
  err["kind"] = kind_ == QueryErrorKind::EmptyQuery ? "empty-query" : "invalid-limit";
  err["message"] = what();
  return Json{{"error", std::move(err)}};
}

SearchResponse search(const Snapshot& snapshot, const CombinedQuery& q) {
  const bool has_text = !blank(q.text);
  const bool has_math = !blank(q.math);
  if (!has_text && !has_math) throw QueryError(QueryErrorKind::EmptyQuery, "both text and math query are empty");
  if (q.limit == 0) throw QueryError(QueryErrorKind::InvalidLimit, "limit must be positive");

  std::optional<Expr> pattern;
  if (has_math) {
    try {
      pattern = parse_query(*q.math);
    } catch (const ParseError& e) {
      throw QueryError(e);
    }
  }

  SearchResponse response;

  std::vector<TextHit> text_hits;
  std::vector<std::string> query_tokens;
  if (has_text) {
    auto t0 = std::chrono::steady_clock::now();
    text_hits = snapshot.text().search(*q.text, snapshot.text().doc_count());
    query_tokens = tokenize(*q.text);
    response.timings.text_ms = elapsed_ms(t0);
  }

  std::vector<FormulaHit> math_hits;
  std::map<std::string, MathGroup> groups;
  if (pattern) {
    auto t0 = std::chrono::steady_clock::now();
    math_hits = snapshot.math().query(*pattern, q.alpha);
    for (const FormulaHit& h : math_hits) {
      MathGroup& g = groups[h.ref.doc_id];
      if (g.hits.empty()) g.best = h.score;
      g.hits.push_back(&h);
    }
    response.timings.math_ms = elapsed_ms(t0);
  }

  struct Ranked {
    const Document* doc;
    std::optional<double> text_score;
    const MathGroup* group;
  };
  std::vector<Ranked> ranked;
  if (has_text) {
    for (const TextHit& th : text_hits) {
      const MathGroup* g = nullptr;
      if (has_math) {
        auto it = groups.find(th.doc_id);
        if (it == groups.end()) continue;
        g = &it->second;
      }
      ranked.push_back({snapshot.find(th.doc_id), th.score, g});
    }
    // Text hits arrive ordered by score then doc_id; break text-score ties
    // by the best formula score.
    if (has_math) {
      std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (*a.text_score != *b.text_score) return *a.text_score > *b.text_score;
        if (a.group->best != b.group->best) return a.group->best > b.group->best;
        return a.doc->id < b.doc->id;
      });
    }
  } else {
    for (const auto& [doc_id, g] : groups) ranked.push_back({snapshot.find(doc_id), std::nullopt, &g});
    std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
      if (a.group->best != b.group->best) return a.group->best > b.group->best;
      return a.doc->id < b.doc->id;
    });
  }

  response.total = ranked.size();
  if (ranked.size() > q.limit) ranked.resize(q.limit);

  for (const Ranked& r : ranked) {
    DocResult out;
    out.doc_id = r.doc->id;
    out.title = r.doc->title;
    out.text_score = r.text_score;
    if (!query_tokens.empty()) out.snippet = snippet_around(r.doc->plain, query_tokens, kSnippetWidth);
    if (out.snippet.empty()) out.snippet = r.doc->title;
    if (r.group) {
      for (const FormulaHit* h : r.group->hits) out.formula_hits.push_back(render_hit(*r.doc, *h));
    }
    response.results.push_back(std::move(out));
  }
  return response;
}

Json to_json(const DocResult& r) {
  Json j = Json::object();
  j["doc_id"] = r.doc_id;
  j["title"] = r.title;
  if (r.text_score) j["text_score"] = *r.text_score;
  j["snippet"] = r.snippet;
  Json hits = Json::array();
  for (const RenderedHit& h : r.formula_hits) {
    Json hj = Json::object();
    hj["formula_id"] = h.formula_id;
    hj["path"] = h.path;
    hj["score"] = h.score.str();
    hj["score_value"] = h.score.value();
    hj["latex"] = h.latex;
    hj["formula_latex"] = h.formula_latex;
    hj["substitution"] = pairs_json(h.substitution);
    hj["renaming"] = pairs_json(h.renaming);
    hits.push_back(std::move(hj));
  }
  j["formula_hits"] = std::move(hits);
  return j;
}

Json to_json(const SearchResponse& response) {
  Json results = Json::array();
  for (const DocResult& r : response.results) results.push_back(to_json(r));
  Json j = Json::object();
  j["results"] = std::move(results);
  j["total"] = response.total;
  j["timings"] = Json{{"text_ms", response.timings.text_ms}, {"math_ms", response.timings.math_ms}};
  return j;
}

std::string json_body(const Json& j) { return j.dump(2) + "\n"; }

std::string response_body(const SearchResponse& response) { return json_body(to_json(response)); }

}  // namespace mathsearch
