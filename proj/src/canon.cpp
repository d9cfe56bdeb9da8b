#include "mathsearch/canon.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>
#include <utility>

namespace mathsearch {

namespace {

Expr minus_one() { return Expr::number("-1"); }

void append_flattened(Op op, Expr arg, std::vector<Expr>& out) {
  if (arg.is_apply(op)) {
    for (const Expr& a : arg.args()) out.push_back(a);
  } else {
    out.push_back(std::move(arg));
  }
}

Expr sorted_commutative(Op op, std::vector<Expr> in) {
  std::vector<Expr> flat;
  for (Expr& a : in) append_flattened(op, std::move(a), flat);

  std::vector<TermKey> keys;
  keys.reserve(flat.size());
  for (const Expr& a : flat) keys.push_back(linearize(a));
  std::vector<std::size_t> order(flat.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return keys[l] < keys[r]; });

  std::vector<Expr> args;
  args.reserve(flat.size());
  for (std::size_t i : order) args.push_back(std::move(flat[i]));
  return Expr::apply(op, std::move(args));
}

}  // namespace

Expr canonicalize(const Expr& e) {
  if (!e.is_apply()) return e;

  std::vector<Expr> args;
  args.reserve(e.args().size());
  for (const Expr& a : e.args()) args.push_back(canonicalize(a));

  switch (e.op()) {
    case Op::Plus:
    case Op::Times:
      return sorted_commutative(e.op(), std::move(args));
    case Op::Negate:
      return sorted_commutative(Op::Times, {minus_one(), std::move(args[0])});
    case Op::Minus: {
      Expr negated = sorted_commutative(Op::Times, {minus_one(), std::move(args[1])});
      return sorted_commutative(Op::Plus, {std::move(args[0]), std::move(negated)});
    }
    case Op::Function:
      return Expr::function(e.symbol(), std::move(args));
    default:
      return Expr::apply(e.op(), std::move(args));
  }
}

bool is_canonical(const Expr& e) { return canonicalize(e) == e; }

AlphaKey alpha_tokens(std::span<const std::string> tokens) {
  AlphaKey out;
  out.tokens.reserve(tokens.size());
  std::unordered_map<std::string_view, std::size_t> ordinal;
  for (const std::string& tok : tokens) {
    if (tok.size() > 2 && tok[0] == 'I' && tok[1] == ':') {
      auto [it, fresh] = ordinal.try_emplace(std::string_view(tok).substr(2), ordinal.size() + 1);
      out.tokens.push_back("V:" + std::to_string(it->second));
    } else {
      out.tokens.push_back(tok);
    }
  }
  return out;
}

AlphaKey alpha_key(const Expr& e) {
  TermKey key = linearize(e);
  return alpha_tokens(key.tokens);
}

}  // namespace mathsearch
