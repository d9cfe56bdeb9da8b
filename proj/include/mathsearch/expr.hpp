// Content expression trees for formulas and formula queries.
//
// A formula is stored as an operator tree (what it computes), not as
// layout. Queries reuse the same tree type with an extra Wildcard leaf.

#ifndef MATHSEARCH_EXPR_HPP
#define MATHSEARCH_EXPR_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mathsearch {

using Json = nlohmann::ordered_json;

enum class NodeKind : std::uint8_t { Number, Identifier, Text, Apply, Wildcard };

enum class Op : std::uint8_t {
  Plus,
  Times,
  Minus,
  Negate,
  Divide,
  Power,
  Subscript,
  Eq,
  Mod,
  Sequence,
  Ellipsis,
  Annotate,
  Function,  // named function, e.g. sin; the name lives in Expr::symbol()
};

std::string_view op_name(Op op);
std::optional<Op> op_from_name(std::string_view name);

/// True for the heads whose argument order carries no meaning.
inline bool is_commutative(Op op) { return op == Op::Plus || op == Op::Times; }

/// Immutable value-semantics tree node.
///
/// `symbol()` holds the literal of a Number, the name of an Identifier or
/// Wildcard, the verbatim content of a Text node, and the function name of
/// an Apply with head Op::Function. It is empty for other Apply heads.
class Expr {
 public:
  static Expr number(std::string value);
  static Expr identifier(std::string name);
  static Expr text(std::string content);
  static Expr wildcard(std::string name);
  /// Throws std::invalid_argument when the arity does not fit the head.
  static Expr apply(Op op, std::vector<Expr> args);
  static Expr function(std::string name, std::vector<Expr> args);

  NodeKind kind() const { return kind_; }
  Op op() const { return op_; }
  const std::string& symbol() const { return symbol_; }
  const std::vector<Expr>& args() const { return args_; }

  bool is_apply() const { return kind_ == NodeKind::Apply; }
  bool is_apply(Op op) const { return kind_ == NodeKind::Apply && op_ == op; }
  bool is_wildcard() const { return kind_ == NodeKind::Wildcard; }

  /// Head label used in keys and JSON: op name, or the function name.
  std::string_view head_name() const;

  bool operator==(const Expr& other) const = default;

 private:
  Expr(NodeKind kind, Op op, std::string symbol, std::vector<Expr> args)
      : kind_(kind), op_(op), symbol_(std::move(symbol)), args_(std::move(args)) {}

  NodeKind kind_ = NodeKind::Number;
  Op op_ = Op::Plus;
  std::string symbol_;
  std::vector<Expr> args_;
};

using MathExpr = Expr;
using QueryExpr = Expr;

std::size_t hash_value(const Expr& e);

std::size_t node_count(const Expr& e);
std::size_t depth(const Expr& e);
bool contains_wildcard(const Expr& e);

/// Child-index path from the root.
using Path = std::vector<std::uint32_t>;

struct Subterm {
  Path path;
  const Expr* node;
};

/// All subtrees of `e` in pre-order, `e` itself first. Pointers refer into `e`.
std::vector<Subterm> subterms(const Expr& e);

/// Resolves a path; nullptr when the path leaves the tree.
const Expr* subterm_at(const Expr& e, const Path& path);

/// Pre-order token sequence, one token per node.
struct TermKey {
  std::vector<std::string> tokens;

  std::size_t size() const { return tokens.size(); }
  auto operator<=>(const TermKey&) const = default;
  bool operator==(const TermKey&) const = default;
  std::string str() const;
};

std::string text_token_hash(std::string_view content);

/// Token for a single node, ignoring its children.
std::string node_token(const Expr& e);

/// Pre-order TermKey of `e`. Wildcards (query trees only) yield `W:<name>`.
TermKey linearize(const Expr& e);

/// Arity encoded in an `A:<head>:<arity>` token, 0 for leaf tokens.
std::size_t token_arity(std::string_view token);

Json to_json(const Expr& e);
/// Throws std::invalid_argument on malformed input.
Expr expr_from_json(const Json& j);

}  // namespace mathsearch

template <>
struct std::hash<mathsearch::Expr> {
  std::size_t operator()(const mathsearch::Expr& e) const { return mathsearch::hash_value(e); }
};

#endif  // MATHSEARCH_EXPR_HPP
