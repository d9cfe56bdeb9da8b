// Parser for the supported LaTeX math subset, and the matching printer.
//
// Grammar, loosest to tightest:
//
//   annotated := sequence ( \text{...} sequence? )*
//   sequence  := eq ( ',' eq )*
//   eq        := mod ( '=' mod )*
//   mod       := add ( (\bmod | \pmod) add )*
//   add       := mul ( ('+' | '-') mul )*
//   mul       := unary ( ('*' | \cdot | \times | '/' | <juxtaposition>) unary )*
//   unary     := '-' unary | postfix
//   postfix   := atom ( '_' arg )? ( '^' arg )?       (either order)
//   atom      := letter | number | greek | \frac arg arg | \sqrt arg
//              | \sin ... | \dots | \text{...} | '(' annotated ')'
//              | '{' annotated '}' | '?' letter   (queries only)

#ifndef MATHSEARCH_TEXPARSE_HPP
#define MATHSEARCH_TEXPARSE_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mathsearch/expr.hpp"

namespace mathsearch {

enum class ParseErrorKind { UnexpectedToken, UnbalancedBrace, UnknownCommand, EmptyInput };

std::string_view parse_error_kind_name(ParseErrorKind kind);

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t position, ParseErrorKind kind, std::string message);

  std::size_t position() const { return position_; }
  ParseErrorKind kind() const { return kind_; }
  const std::string& message() const { return message_; }

  /// {"position": .., "kind": .., "message": ..}
  Json to_json() const;

 private:
  std::size_t position_;
  ParseErrorKind kind_;
  std::string message_;
};

/// Corpus formula; `?` placeholders are rejected.
Expr parse_formula(std::string_view src);

/// Query formula; `?x` is a Wildcard.
Expr parse_query(std::string_view src);

/// LaTeX that parses back to a structurally equal tree for every tree the
/// parser produces.
std::string to_latex(const Expr& e);

bool is_greek_name(std::string_view name);

}  // namespace mathsearch

#endif  // MATHSEARCH_TEXPARSE_HPP
