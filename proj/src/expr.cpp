#include "mathsearch/expr.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <stdexcept>
#include <utility>

#include "mathsearch/hash.hpp"

namespace mathsearch {

std::string hex64(std::uint64_t value) {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(value));
  return std::string(buf.data(), 16);
}

namespace {

constexpr std::array<std::pair<Op, std::string_view>, 12> kOpNames{{
    {Op::Plus, "plus"},
    {Op::Times, "times"},
    {Op::Minus, "minus"},
    {Op::Negate, "negate"},
    {Op::Divide, "divide"},
    {Op::Power, "power"},
    {Op::Subscript, "subscript"},
    {Op::Eq, "eq"},
    {Op::Mod, "mod"},
    {Op::Sequence, "sequence"},
    {Op::Ellipsis, "ellipsis"},
    {Op::Annotate, "annotate"},
}};

void check_arity(Op op, std::size_t n) {
  bool ok = true;
  switch (op) {
    case Op::Plus:
    case Op::Times:
    case Op::Eq:
      ok = n >= 2;
      break;
    case Op::Minus:
    case Op::Divide:
    case Op::Power:
    case Op::Subscript:
    case Op::Mod:
    case Op::Annotate:
      ok = n == 2;
      break;
    case Op::Negate:
      ok = n == 1;
      break;
    case Op::Ellipsis:
      ok = n == 0;
      break;
    case Op::Sequence:
    case Op::Function:
      ok = n >= 1;
      break;
  }
  if (!ok) {
    throw std::invalid_argument("bad arity " + std::to_string(n) + " for " +
                                std::string(op == Op::Function ? "function" : op_name(op)));
  }
}

void collect_subterms(const Expr& e, Path& path, std::vector<Subterm>& out) {
  out.push_back({path, &e});
  for (std::uint32_t i = 0; i < e.args().size(); ++i) {
    path.push_back(i);
    collect_subterms(e.args()[i], path, out);
    path.pop_back();
  }
}

void linearize_into(const Expr& e, std::vector<std::string>& out) {
  out.push_back(node_token(e));
  for (const Expr& a : e.args()) linearize_into(a, out);
}

}  // namespace

std::string_view op_name(Op op) {
  for (const auto& [o, name] : kOpNames) {
    if (o == op) return name;
  }
  return "function";
}

std::optional<Op> op_from_name(std::string_view name) {
  for (const auto& [o, n] : kOpNames) {
    if (n == name) return o;
  }
  return std::nullopt;
}

Expr Expr::number(std::string value) {
  if (value.empty()) throw std::invalid_argument("empty number literal");
  return Expr(NodeKind::Number, Op::Plus, std::move(value), {});
}

Expr Expr::identifier(std::string name) {
  if (name.empty()) throw std::invalid_argument("empty identifier");
  return Expr(NodeKind::Identifier, Op::Plus, std::move(name), {});
}

Expr Expr::text(std::string content) {
  return Expr(NodeKind::Text, Op::Plus, std::move(content), {});
}

Expr Expr::wildcard(std::string name) {
  if (name.empty()) throw std::invalid_argument("empty wildcard name");
  return Expr(NodeKind::Wildcard, Op::Plus, std::move(name), {});
}

Expr Expr::apply(Op op, std::vector<Expr> args) {
  if (op == Op::Function) throw std::invalid_argument("use Expr::function for named functions");
  check_arity(op, args.size());
  return Expr(NodeKind::Apply, op, {}, std::move(args));
}

Expr Expr::function(std::string name, std::vector<Expr> args) {
  if (name.empty() || op_from_name(name)) {
    throw std::invalid_argument("invalid function name '" + name + "'");
  }
  check_arity(Op::Function, args.size());
  return Expr(NodeKind::Apply, Op::Function, std::move(name), std::move(args));
}

std::string_view Expr::head_name() const {
  if (op_ == Op::Function) return symbol_;
  return op_name(op_);
}

std::size_t hash_value(const Expr& e) {
  std::uint64_t h = fnv1a64(node_token(e));
  for (const Expr& a : e.args()) {
    h ^= hash_value(a) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

std::size_t node_count(const Expr& e) {
  std::size_t n = 1;
  for (const Expr& a : e.args()) n += node_count(a);
  return n;
}

std::size_t depth(const Expr& e) {
  std::size_t d = 0;
  for (const Expr& a : e.args()) d = std::max(d, depth(a));
  return d + 1;
}

bool contains_wildcard(const Expr& e) {
  if (e.is_wildcard()) return true;
  for (const Expr& a : e.args()) {
    if (contains_wildcard(a)) return true;
  }
  return false;
}

std::vector<Subterm> subterms(const Expr& e) {
  std::vector<Subterm> out;
  Path path;
  collect_subterms(e, path, out);
  return out;
}

const Expr* subterm_at(const Expr& e, const Path& path) {
  const Expr* cur = &e;
  for (std::uint32_t i : path) {
    if (i >= cur->args().size()) return nullptr;
    cur = &cur->args()[i];
  }
  return cur;
}

std::string TermKey::str() const {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    s += tokens[i];
  }
  return s;
}

std::string text_token_hash(std::string_view content) { return hex64(fnv1a64(content)); }

std::string node_token(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::Number:
      return "N:" + e.symbol();
    case NodeKind::Identifier:
      return "I:" + e.symbol();
    case NodeKind::Text:
      return "T:" + text_token_hash(e.symbol());
    case NodeKind::Wildcard:
      return "W:" + e.symbol();
    case NodeKind::Apply:
      break;
  }
  std::string tok = "A:";
  tok += e.head_name();
  tok += ':';
  tok += std::to_string(e.args().size());
  return tok;
}

TermKey linearize(const Expr& e) {
  TermKey key;
  linearize_into(e, key.tokens);
  return key;
}

std::size_t token_arity(std::string_view token) {
  if (token.size() < 2 || token[0] != 'A') return 0;
  auto colon = token.rfind(':');
  std::size_t arity = 0;
  std::from_chars(token.data() + colon + 1, token.data() + token.size(), arity);
  return arity;
}

Json to_json(const Expr& e) {
  Json j = Json::object();
  switch (e.kind()) {
    case NodeKind::Apply: {
      j["k"] = "apply";
      j["head"] = std::string(e.head_name());
      Json args = Json::array();
      for (const Expr& a : e.args()) args.push_back(to_json(a));
      j["args"] = std::move(args);
      break;
    }
    case NodeKind::Identifier:
      j["k"] = "id";
      j["name"] = e.symbol();
      break;
    case NodeKind::Number:
      j["k"] = "num";
      j["value"] = e.symbol();
      break;
    case NodeKind::Text:
      j["k"] = "text";
      j["content"] = e.symbol();
      break;
    case NodeKind::Wildcard:
      j["k"] = "wild";
      j["name"] = e.symbol();
      break;
  }
  return j;
}

Expr expr_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("k") || !j["k"].is_string()) {
    throw std::invalid_argument("expression node must be an object with a string 'k'");
  }
  auto field = [&](const char* name) -> std::string {
    auto it = j.find(name);
    if (it == j.end() || !it->is_string()) {
      throw std::invalid_argument(std::string("missing string field '") + name + "'");
    }
    return it->get<std::string>();
  };
  const std::string kind = j["k"].get<std::string>();
  if (kind == "id") return Expr::identifier(field("name"));
  if (kind == "num") return Expr::number(field("value"));
  if (kind == "text") return Expr::text(field("content"));
  if (kind == "wild") return Expr::wildcard(field("name"));
  if (kind != "apply") throw std::invalid_argument("unknown node kind '" + kind + "'");

  const std::string head = field("head");
  auto it = j.find("args");
  if (it == j.end() || !it->is_array()) throw std::invalid_argument("apply node without 'args'");
  std::vector<Expr> args;
  args.reserve(it->size());
  for (const Json& a : *it) args.push_back(expr_from_json(a));
  if (auto op = op_from_name(head)) return Expr::apply(*op, std::move(args));
  return Expr::function(head, std::move(args));
}

}  // namespace mathsearch
