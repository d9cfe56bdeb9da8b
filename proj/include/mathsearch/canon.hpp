// Canonical forms: notation variants of one formula collapse to one tree.

#ifndef MATHSEARCH_CANON_HPP
#define MATHSEARCH_CANON_HPP

#include <span>
#include <string>

#include "mathsearch/expr.hpp"

namespace mathsearch {

/// Flattens nested plus/times, rewrites minus and negate into plus/times
/// with a -1 coefficient, and orders plus/times arguments by TermKey.
/// Idempotent. Works on query trees too (wildcards sort as `W:` tokens).
Expr canonicalize(const Expr& e);

bool is_canonical(const Expr& e);

/// TermKey with every identifier replaced by `V:<k>`, k being the 1-based
/// ordinal of the identifier's first occurrence in pre-order.
using AlphaKey = TermKey;

AlphaKey alpha_key(const Expr& e);

/// Applies the alpha renaming to an already linearized key.
AlphaKey alpha_tokens(std::span<const std::string> tokens);

}  // namespace mathsearch

#endif  // MATHSEARCH_CANON_HPP
