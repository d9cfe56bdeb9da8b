#include "mathsearch/mathindex.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>

#include "mathsearch/canon.hpp"

namespace mathsearch {

// ---------------------------------------------------------------------------
// Root matcher

namespace {

class Matcher {
 public:
  explicit Matcher(bool alpha) : alpha_(alpha) {}

  struct Goal {
    enum class Type { Term, Assign } type = Type::Term;
    const Expr* pattern = nullptr;
    const Expr* subject = nullptr;
    // Assign: next pattern argument, subject args already taken, absorber.
    std::size_t next = 0;
    std::uint32_t used = 0;
    std::ptrdiff_t absorber = -1;
  };

  struct State {
    std::vector<std::pair<std::string_view, const Expr*>> bindings;
    std::vector<std::pair<std::string_view, std::string_view>> renaming;
  };

  std::optional<Substitution> run(const Expr& pattern, const Expr& subject) {
    std::vector<Goal> goals{Goal{Goal::Type::Term, &pattern, &subject}};
    if (!solve(std::move(goals))) return std::nullopt;
    Substitution out;
    for (const auto& [name, value] : state_.bindings) out.bindings.emplace(name, *value);
    for (const auto& [from, to] : state_.renaming) out.renaming.emplace(from, to);
    return out;
  }

 private:
  bool bind(std::string_view name, const Expr* value) {
    for (const auto& [n, v] : state_.bindings) {
      if (n == name) return *v == *value;
    }
    state_.bindings.emplace_back(name, value);
    return true;
  }

  bool rename(std::string_view from, std::string_view to) {
    for (const auto& [f, t] : state_.renaming) {
      if (f == from) return t == to;
      if (t == to) return false;
    }
    state_.renaming.emplace_back(from, to);
    return true;
  }

  bool try_alternative(const std::vector<Goal>& goals) {
    State saved = state_;
    std::size_t arena_size = arena_.size();
    if (solve(goals)) return true;
    state_ = std::move(saved);
    while (arena_.size() > arena_size) arena_.pop_back();
    return false;
  }

  bool solve(std::vector<Goal> goals) {
    while (!goals.empty()) {
      Goal g = goals.back();
      goals.pop_back();
      if (g.type == Goal::Type::Assign) return solve_assign(std::move(goals), g);
      const Expr& p = *g.pattern;
      const Expr& s = *g.subject;
      switch (p.kind()) {
        case NodeKind::Wildcard:
          if (!bind(p.symbol(), &s)) return false;
          continue;
        case NodeKind::Identifier:
          if (s.kind() != NodeKind::Identifier) return false;
          if (alpha_) {
            if (!rename(p.symbol(), s.symbol())) return false;
          } else if (p.symbol() != s.symbol()) {
            return false;
          }
          continue;
        case NodeKind::Number:
        case NodeKind::Text:
          if (s.kind() != p.kind() || s.symbol() != p.symbol()) return false;
          continue;
        case NodeKind::Apply:
          break;
      }
      if (!s.is_apply() || s.op() != p.op() || s.symbol() != p.symbol()) return false;
      const std::size_t k = p.args().size();
      const std::size_t m = s.args().size();
      if (!is_commutative(p.op())) {
        if (k != m) return false;
        for (std::size_t i = k; i-- > 0;) {
          goals.push_back(Goal{Goal::Type::Term, &p.args()[i], &s.args()[i]});
        }
        continue;
      }
      if (k == m && m <= 32) {
        goals.push_back(Goal{Goal::Type::Assign, &p, &s, 0, 0, -1});
        return solve(std::move(goals));
      }
      if (k > m || m > 32) return false;  // used-argument mask is 32 bits
      for (std::size_t w = 0; w < k; ++w) {
        if (!p.args()[w].is_wildcard()) continue;
        std::vector<Goal> alt = goals;
        alt.push_back(Goal{Goal::Type::Assign, &p, &s, 0, 0, static_cast<std::ptrdiff_t>(w)});
        if (try_alternative(alt)) return true;
      }
      return false;
    }
    return true;
  }

  bool solve_assign(std::vector<Goal> goals, Goal g) {
    const Expr& p = *g.pattern;
    const Expr& s = *g.subject;
    std::size_t i = g.next;
    if (g.absorber >= 0 && i == static_cast<std::size_t>(g.absorber)) ++i;
    if (i >= p.args().size()) {
      if (g.absorber >= 0) {
        std::vector<Expr> rest;
        for (std::size_t j = 0; j < s.args().size(); ++j) {
          if (!(g.used & (1u << j))) rest.push_back(s.args()[j]);
        }
        arena_.push_back(Expr::apply(s.op(), std::move(rest)));
        goals.push_back(Goal{Goal::Type::Term, &p.args()[g.absorber], &arena_.back()});
      }
      return solve(std::move(goals));
    }
    for (std::size_t j = 0; j < s.args().size(); ++j) {
      if (g.used & (1u << j)) continue;
      std::vector<Goal> alt = goals;
      alt.push_back(Goal{Goal::Type::Assign, &p, &s, i + 1, g.used | (1u << j), g.absorber});
      alt.push_back(Goal{Goal::Type::Term, &p.args()[i], &s.args()[j]});
      if (try_alternative(alt)) return true;
    }
    return false;
  }

  bool alpha_;
  State state_;
  std::deque<Expr> arena_;
};

}  // namespace

std::optional<Substitution> match(const Expr& pattern, const Expr& subject, bool alpha) {
  return Matcher(alpha).run(pattern, subject);
}

std::size_t concrete_node_count(const Expr& pattern) {
  if (pattern.is_wildcard()) return 0;
  std::size_t n = 1;
  for (const Expr& a : pattern.args()) n += concrete_node_count(a);
  return n;
}

std::size_t max_commutative_arity(const Expr& e) {
  std::size_t best = (e.is_apply() && is_commutative(e.op())) ? e.args().size() : 0;
  for (const Expr& a : e.args()) best = std::max(best, max_commutative_arity(a));
  return best;
}

namespace {

bool path_before(const Path& a, const Path& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

// One hit per formula (best score, then shortest path), ordered by score
// descending and then by reference.
std::vector<FormulaHit> finalize_hits(std::vector<FormulaHit> hits) {
  std::map<std::pair<std::string, std::uint32_t>, FormulaHit> best;
  for (FormulaHit& h : hits) {
    auto key = std::make_pair(h.ref.doc_id, h.ref.formula_id);
    auto it = best.find(key);
    if (it == best.end()) {
      best.emplace(std::move(key), std::move(h));
      continue;
    }
    FormulaHit& cur = it->second;
    if (h.score > cur.score || (h.score == cur.score && path_before(h.ref.path, cur.ref.path))) {
      cur = std::move(h);
    }
  }
  std::vector<FormulaHit> out;
  out.reserve(best.size());
  for (auto& [key, h] : best) out.push_back(std::move(h));
  std::stable_sort(out.begin(), out.end(), [](const FormulaHit& a, const FormulaHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ref < b.ref;
  });
  return out;
}

std::optional<FormulaHit> confirm(const IndexedFormula& f, std::uint32_t subterm,
                                  const Expr& pattern, bool alpha, std::size_t concrete) {
  const Expr* subject = subterm_at(f.expr, f.paths[subterm]);
  auto sub = match(pattern, *subject, alpha);
  if (!sub) return std::nullopt;
  return FormulaHit{FormulaRef{f.doc_id, f.formula_id, f.paths[subterm]}, std::move(*sub),
                    Score{concrete, node_count(f.expr)}};
}

}  // namespace

std::vector<FormulaHit> brute_force_query(std::span<const IndexedFormula> formulas,
                                          const Expr& pattern, bool alpha, QueryStats* stats) {
  const Expr canonical = canonicalize(pattern);
  const std::size_t concrete = concrete_node_count(canonical);
  std::vector<FormulaHit> hits;
  std::size_t confirmations = 0;
  for (const IndexedFormula& f : formulas) {
    for (std::uint32_t s = 0; s < f.paths.size(); ++s) {
      ++confirmations;
      if (auto hit = confirm(f, s, canonical, alpha, concrete)) hits.push_back(std::move(*hit));
    }
  }
  if (stats) {
    stats->candidates = confirmations;
    stats->confirmations = confirmations;
  }
  return finalize_hits(std::move(hits));
}

// ---------------------------------------------------------------------------
// Discrimination tree

void DiscTree::insert(std::span<const std::string> key, EntryRef ref) {
  std::uint32_t cur = 0;
  for (const std::string& tok : key) {
    auto it = nodes_[cur].next.find(tok);
    if (it == nodes_[cur].next.end()) {
      auto id = static_cast<std::uint32_t>(nodes_.size());
      nodes_[cur].next.emplace(tok, id);
      nodes_.emplace_back();
      cur = id;
    } else {
      cur = it->second;
    }
  }
  auto& refs = nodes_[cur].refs;
  auto pos = std::lower_bound(refs.begin(), refs.end(), ref);
  if (pos == refs.end() || *pos != ref) refs.insert(pos, ref);
}

std::size_t DiscTree::entry_count() const {
  std::size_t n = 0;
  for (const Node& node : nodes_) n += node.refs.size();
  return n;
}

std::size_t DiscTree::distinct_key_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return !n.refs.empty(); }));
}

std::vector<EntryRef> DiscTree::lookup(std::span<const std::string> key) const {
  std::uint32_t cur = 0;
  for (const std::string& tok : key) {
    auto it = nodes_[cur].next.find(tok);
    if (it == nodes_[cur].next.end()) return {};
    cur = it->second;
  }
  return nodes_[cur].refs;
}

Json DiscTree::to_json() const {
  Json nodes = Json::array();
  for (const Node& n : nodes_) {
    Json next = Json::array();
    for (const auto& [tok, id] : n.next) next.push_back(Json::array({tok, id}));
    Json refs = Json::array();
    for (const EntryRef& r : n.refs) refs.push_back(Json::array({r.formula, r.subterm}));
    Json node = Json::object();
    node["next"] = std::move(next);
    node["refs"] = std::move(refs);
    nodes.push_back(std::move(node));
  }
  Json j = Json::object();
  j["nodes"] = std::move(nodes);
  return j;
}

DiscTree DiscTree::from_json(const Json& j) {
  DiscTree tree;
  const Json& nodes = j.at("nodes");
  if (!nodes.is_array() || nodes.empty()) throw std::invalid_argument("trie without nodes");
  tree.nodes_.clear();
  tree.nodes_.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    Node& node = tree.nodes_[i];
    for (const Json& e : nodes[i].at("next")) {
      auto child = e.at(1).get<std::uint32_t>();
      if (child >= nodes.size() || child <= i) throw std::invalid_argument("trie edge out of range");
      node.next.emplace(e.at(0).get<std::string>(), child);
    }
    for (const Json& r : nodes[i].at("refs")) {
      node.refs.push_back(EntryRef{r.at(0).get<std::uint32_t>(), r.at(1).get<std::uint32_t>()});
    }
    if (!std::is_sorted(node.refs.begin(), node.refs.end())) {
      throw std::invalid_argument("trie refs not sorted");
    }
  }
  return tree;
}

// ---------------------------------------------------------------------------
// Trie walk

namespace {

// Pending plus/times argument assignment: `remaining` subject arguments are
// still to be consumed, each either by one of `unassigned` or, while
// `absorb` > 0, by the absorbing wildcard.
struct CommFrame {
  std::size_t remaining = 0;
  std::vector<const Expr*> unassigned;
  std::size_t absorb = 0;
};

using WalkItem = std::variant<const Expr*, CommFrame>;

struct WalkState {
  std::vector<WalkItem> stack;  // back() is consumed next
  std::vector<std::pair<std::string_view, std::string_view>> alpha;  // pattern id -> V token
};

class Walker {
 public:
  Walker(const DiscTree& tree, bool alpha) : tree_(tree), alpha_(alpha) {}

  std::vector<std::uint32_t> run(const Expr& pattern) {
    WalkState st;
    st.stack.push_back(&pattern);
    walk(0, std::move(st));
    std::vector<std::uint32_t> out(ends_.begin(), ends_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  // Structural shape with wildcard names erased; args of equal shape are
  // interchangeable during the walk.
  const std::string& shape(const Expr* e) {
    auto it = shapes_.find(e);
    if (it != shapes_.end()) return it->second;
    std::string s;
    for (const std::string& tok : linearize(*e).tokens) {
      s += tok[0] == 'W' ? std::string("W") : tok;
      s += '\x1f';
    }
    return shapes_.emplace(e, std::move(s)).first->second;
  }

  template <typename F>
  void skip_term(std::uint32_t node, std::size_t need, F& on_end) const {
    for (const auto& [tok, child] : tree_.node(node).next) {
      std::size_t left = need - 1 + token_arity(tok);
      if (left == 0) {
        on_end(child);
      } else {
        skip_term(child, left, on_end);
      }
    }
  }

  void follow(std::uint32_t node, const std::string& token, WalkState st) {
    const auto& next = tree_.node(node).next;
    auto it = next.find(token);
    if (it != next.end()) walk(it->second, std::move(st));
  }

  void walk(std::uint32_t node, WalkState st) {
    if (st.stack.empty()) {
      ends_.insert(node);
      return;
    }
    WalkItem item = std::move(st.stack.back());
    st.stack.pop_back();
    if (auto* frame = std::get_if<CommFrame>(&item)) {
      walk_frame(node, std::move(*frame), std::move(st));
      return;
    }
    const Expr& p = *std::get<const Expr*>(item);
    switch (p.kind()) {
      case NodeKind::Wildcard: {
        auto on_end = [&](std::uint32_t end) { walk(end, st); };
        skip_term(node, 1, on_end);
        return;
      }
      case NodeKind::Identifier:
        if (alpha_) {
          walk_alpha_identifier(node, p.symbol(), std::move(st));
        } else {
          follow(node, node_token(p), std::move(st));
        }
        return;
      case NodeKind::Number:
      case NodeKind::Text:
        follow(node, node_token(p), std::move(st));
        return;
      case NodeKind::Apply:
        break;
    }
    if (!is_commutative(p.op())) {
      for (std::size_t i = p.args().size(); i-- > 0;) st.stack.push_back(&p.args()[i]);
      follow(node, node_token(p), std::move(st));
      return;
    }
    walk_commutative(node, p, std::move(st));
  }

  void walk_alpha_identifier(std::uint32_t node, std::string_view name, WalkState st) {
    const auto& next = tree_.node(node).next;
    for (const auto& [from, to] : st.alpha) {
      if (from == name) {
        auto it = next.find(to);
        if (it != next.end()) walk(it->second, std::move(st));
        return;
      }
    }
    for (auto it = next.lower_bound("V:"); it != next.end() && it->first.starts_with("V:"); ++it) {
      std::string_view tok = it->first;
      bool taken = std::any_of(st.alpha.begin(), st.alpha.end(),
                               [&](const auto& pr) { return pr.second == tok; });
      if (taken) continue;
      WalkState branch = st;
      branch.alpha.emplace_back(name, tok);
      walk(it->second, std::move(branch));
    }
  }

  void walk_commutative(std::uint32_t node, const Expr& p, WalkState st) {
    const std::size_t k = p.args().size();
    const bool has_bare =
        std::any_of(p.args().begin(), p.args().end(), [](const Expr& a) { return a.is_wildcard(); });
    const std::string prefix = "A:" + std::string(p.head_name()) + ":";
    const auto& next = tree_.node(node).next;
    for (auto it = next.lower_bound(prefix); it != next.end() && it->first.starts_with(prefix);
         ++it) {
      const std::size_t m = token_arity(it->first);
      CommFrame frame;
      frame.remaining = m;
      if (m == k) {
        for (const Expr& a : p.args()) frame.unassigned.push_back(&a);
      } else if (m > k && has_bare) {
        bool dropped = false;
        for (const Expr& a : p.args()) {
          if (!dropped && a.is_wildcard()) {
            dropped = true;
            continue;
          }
          frame.unassigned.push_back(&a);
        }
        frame.absorb = m - frame.unassigned.size();
      } else {
        continue;
      }
      WalkState branch = st;
      branch.stack.push_back(std::move(frame));
      walk(it->second, std::move(branch));
    }
  }

  void walk_frame(std::uint32_t node, CommFrame frame, WalkState st) {
    if (frame.remaining == 0) {
      walk(node, std::move(st));
      return;
    }
    std::vector<const std::string*> tried;
    for (std::size_t i = 0; i < frame.unassigned.size(); ++i) {
      const std::string& sh = shape(frame.unassigned[i]);
      if (std::any_of(tried.begin(), tried.end(), [&](const std::string* t) { return *t == sh; })) {
        continue;
      }
      tried.push_back(&sh);
      CommFrame rest = frame;
      rest.remaining -= 1;
      rest.unassigned.erase(rest.unassigned.begin() + static_cast<std::ptrdiff_t>(i));
      WalkState branch = st;
      branch.stack.push_back(std::move(rest));
      branch.stack.push_back(frame.unassigned[i]);
      walk(node, std::move(branch));
    }
    if (frame.absorb > 0) {
      CommFrame rest = frame;
      rest.remaining -= 1;
      rest.absorb -= 1;
      WalkState branch = st;
      branch.stack.push_back(std::move(rest));
      auto on_end = [&](std::uint32_t end) { walk(end, branch); };
      skip_term(node, 1, on_end);
    }
  }

  const DiscTree& tree_;
  bool alpha_;
  std::unordered_set<std::uint32_t> ends_;
  std::unordered_map<const Expr*, std::string> shapes_;
};

}  // namespace

// ---------------------------------------------------------------------------
// MathIndex

bool MathIndex::insert(const Expr& formula, const std::string& doc_id, std::uint32_t formula_id) {
  if (seen_.count({doc_id, formula_id})) return false;
  if (contains_wildcard(formula)) throw std::invalid_argument("corpus formula contains a wildcard");
  if (max_commutative_arity(formula) > kMaxCommutativeArity) {
    throw std::invalid_argument("plus/times arity exceeds " + std::to_string(kMaxCommutativeArity));
  }
  if (!is_canonical(formula)) throw std::invalid_argument("formula is not canonical");

  const auto ordinal = static_cast<std::uint32_t>(formulas_.size());
  IndexedFormula f{doc_id, formula_id, formula, {}};
  const std::vector<Subterm> subs = subterms(f.expr);
  const TermKey key = linearize(f.expr);
  f.paths.reserve(subs.size());
  for (std::uint32_t i = 0; i < subs.size(); ++i) {
    f.paths.push_back(subs[i].path);
    const std::size_t len = node_count(*subs[i].node);
    std::span<const std::string> slice(key.tokens.data() + i, len);
    exact_.insert(slice, EntryRef{ordinal, i});
    alpha_.insert(alpha_tokens(slice).tokens, EntryRef{ordinal, i});
  }
  formulas_.push_back(std::move(f));
  seen_.insert({doc_id, formula_id});
  return true;
}

std::vector<EntryRef> MathIndex::candidates(const Expr& pattern, bool alpha) const {
  const Expr canonical = canonicalize(pattern);
  const DiscTree& tree = alpha ? alpha_ : exact_;
  std::vector<EntryRef> out;
  for (std::uint32_t end : Walker(tree, alpha).run(canonical)) {
    const auto& refs = tree.node(end).refs;
    out.insert(out.end(), refs.begin(), refs.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<FormulaHit> MathIndex::query(const Expr& pattern, bool alpha, QueryStats* stats) const {
  const Expr canonical = canonicalize(pattern);
  const std::size_t concrete = concrete_node_count(canonical);
  const std::vector<EntryRef> cands = candidates(canonical, alpha);
  std::vector<FormulaHit> hits;
  for (const EntryRef& c : cands) {
    if (auto hit = confirm(formulas_[c.formula], c.subterm, canonical, alpha, concrete)) {
      hits.push_back(std::move(*hit));
    }
  }
  if (stats) {
    stats->candidates = cands.size();
    stats->confirmations = cands.size();
  }
  return finalize_hits(std::move(hits));
}

std::size_t MathIndex::subterm_count() const {
  std::size_t n = 0;
  for (const IndexedFormula& f : formulas_) n += f.paths.size();
  return n;
}

Json MathIndex::to_json() const {
  Json formulas = Json::array();
  for (const IndexedFormula& f : formulas_) {
    Json entry = Json::object();
    entry["doc"] = f.doc_id;
    entry["formula"] = f.formula_id;
    entry["tree"] = mathsearch::to_json(f.expr);
    formulas.push_back(std::move(entry));
  }
  Json j = Json::object();
  j["format"] = "mathindex/1";
  j["formulas"] = std::move(formulas);
  j["exact"] = exact_.to_json();
  j["alpha"] = alpha_.to_json();
  return j;
}

MathIndex MathIndex::from_json(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "mathindex/1") {
      throw std::invalid_argument("unsupported mathindex format");
    }
    MathIndex index;
    for (const Json& entry : j.at("formulas")) {
      IndexedFormula f{entry.at("doc").get<std::string>(), entry.at("formula").get<std::uint32_t>(),
                       expr_from_json(entry.at("tree")), {}};
      for (const Subterm& s : subterms(f.expr)) f.paths.push_back(s.path);
      index.seen_.insert({f.doc_id, f.formula_id});
      index.formulas_.push_back(std::move(f));
    }
    index.exact_ = DiscTree::from_json(j.at("exact"));
    index.alpha_ = DiscTree::from_json(j.at("alpha"));
    for (const DiscTree* tree : {&index.exact_, &index.alpha_}) {
      for (std::uint32_t n = 0; n < tree->node_count(); ++n) {
        for (const EntryRef& r : tree->node(n).refs) {
          if (r.formula >= index.formulas_.size() ||
              r.subterm >= index.formulas_[r.formula].paths.size()) {
            throw std::invalid_argument("trie entry does not resolve to a subterm");
          }
        }
      }
    }
    return index;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed mathindex: ") + e.what());
  }
}

}  // namespace mathsearch
