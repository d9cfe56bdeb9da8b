#include "mathsearch/texparse.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <utility>
#include <vector>

namespace mathsearch {

namespace {

constexpr std::array<std::string_view, 40> kGreek{
    "alpha",   "beta",    "gamma",  "delta",      "epsilon", "varepsilon", "zeta",   "eta",
    "theta",   "vartheta", "iota",  "kappa",      "lambda",  "mu",         "nu",     "xi",
    "pi",      "varpi",   "rho",    "varrho",     "sigma",   "varsigma",   "tau",    "upsilon",
    "phi",     "varphi",  "chi",    "psi",        "omega",   "Gamma",      "Delta",  "Theta",
    "Lambda",  "Xi",      "Pi",     "Sigma",      "Upsilon", "Phi",        "Psi",    "Omega",
};

constexpr std::array<std::string_view, 6> kFunctions{"sin", "cos", "tan", "log", "ln", "exp"};

constexpr std::size_t kMaxNesting = 200;

bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_function_name(std::string_view name) {
  return std::find(kFunctions.begin(), kFunctions.end(), name) != kFunctions.end();
}

Expr make_run(Op op, std::vector<Expr> items) {
  if (items.size() == 1) return std::move(items.front());
  return Expr::apply(op, std::move(items));
}

class Parser {
 public:
  Parser(std::string_view src, bool allow_wildcards) : src_(src), allow_wildcards_(allow_wildcards) {}

  Expr parse() {
    skip_space();
    if (at_end()) throw ParseError(src_.size(), ParseErrorKind::EmptyInput, "empty formula");
    Expr e = annotated();
    skip_space();
    if (!at_end()) {
      char c = src_[pos_];
      if (c == '}' || c == ')') {
        throw ParseError(pos_, ParseErrorKind::UnbalancedBrace,
                         std::string("unmatched '") + c + "'");
      }
      throw ParseError(pos_, ParseErrorKind::UnexpectedToken, unexpected_message());
    }
    return e;
  }

 private:
  struct Command {
    std::string_view name;  // letters, or a single control symbol
    std::size_t start;
    std::size_t end;
  };

  bool at_end() const { return pos_ >= src_.size(); }

  std::string unexpected_message() const {
    if (at_end()) return "unexpected end of input";
    return std::string("unexpected '") + src_[pos_] + "'";
  }

  [[noreturn]] void fail_unexpected() const {
    throw ParseError(std::min(pos_, src_.size()), ParseErrorKind::UnexpectedToken,
                     unexpected_message());
  }

  std::optional<Command> peek_command() const {
    if (at_end() || src_[pos_] != '\\') return std::nullopt;
    std::size_t i = pos_ + 1;
    if (i >= src_.size()) return Command{{}, pos_, i};
    if (!is_letter(src_[i])) return Command{src_.substr(i, 1), pos_, i + 1};
    std::size_t j = i;
    while (j < src_.size() && is_letter(src_[j])) ++j;
    return Command{src_.substr(i, j - i), pos_, j};
  }

  static bool is_space_command(std::string_view name) {
    return name == " " || name == "," || name == ";" || name == "!" || name == ":" ||
           name == "quad" || name == "qquad";
  }

  void skip_space() {
    while (!at_end()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '~') {
        ++pos_;
        continue;
      }
      if (auto cmd = peek_command(); cmd && is_space_command(cmd->name)) {
        pos_ = cmd->end;
        continue;
      }
      break;
    }
  }

  bool peek_command_named(std::string_view name) {
    skip_space();
    auto cmd = peek_command();
    return cmd && cmd->name == name;
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : parser(p) {
      if (++parser.depth_ > kMaxNesting) {
        throw ParseError(std::min(parser.pos_, parser.src_.size()), ParseErrorKind::UnexpectedToken,
                         "nesting too deep");
      }
    }
    ~DepthGuard() { --parser.depth_; }
    Parser& parser;
  };

  bool at_group_end() {
    skip_space();
    return at_end() || src_[pos_] == '}' || src_[pos_] == ')';
  }

  Expr annotated() {
    DepthGuard guard(*this);
    Expr lhs = sequence();
    while (peek_command_named("text")) {
      Expr note = text_atom();
      if (at_group_end() || peek_command_named("text")) {
        lhs = Expr::apply(Op::Annotate, {std::move(lhs), std::move(note)});
        continue;
      }
      Expr rest = sequence();
      std::vector<Expr> tail;
      tail.push_back(std::move(note));
      if (rest.is_apply(Op::Sequence)) {
        for (const Expr& a : rest.args()) tail.push_back(a);
      } else {
        tail.push_back(std::move(rest));
      }
      lhs = Expr::apply(Op::Annotate,
                        {std::move(lhs), Expr::apply(Op::Sequence, std::move(tail))});
    }
    return lhs;
  }

  Expr sequence() {
    std::vector<Expr> items;
    items.push_back(eq());
    while (true) {
      skip_space();
      if (at_end() || src_[pos_] != ',') break;
      ++pos_;
      items.push_back(eq());
    }
    return make_run(Op::Sequence, std::move(items));
  }

  Expr eq() {
    std::vector<Expr> items;
    items.push_back(mod());
    while (true) {
      skip_space();
      if (at_end() || src_[pos_] != '=') break;
      ++pos_;
      items.push_back(mod());
    }
    return make_run(Op::Eq, std::move(items));
  }

  Expr mod() {
    Expr lhs = add();
    while (peek_command_named("bmod") || peek_command_named("pmod")) {
      pos_ = peek_command()->end;
      Expr rhs = add();
      lhs = Expr::apply(Op::Mod, {std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  Expr add() {
    std::vector<Expr> run;
    run.push_back(mul());
    while (true) {
      skip_space();
      if (at_end()) break;
      char c = src_[pos_];
      if (c == '+') {
        ++pos_;
        run.push_back(mul());
      } else if (c == '-') {
        ++pos_;
        Expr lhs = make_run(Op::Plus, std::move(run));
        run.clear();
        run.push_back(Expr::apply(Op::Minus, {std::move(lhs), mul()}));
      } else {
        break;
      }
    }
    return make_run(Op::Plus, std::move(run));
  }

  // Commands that may begin an operand. Unknown commands count, so that they
  // surface as unknown-command rather than as a stray token.
  bool command_starts_operand(std::string_view name) const {
    return !(name == "text" || name == "bmod" || name == "pmod" || name == "cdot" ||
             name == "times" || is_space_command(name));
  }

  bool starts_operand() {
    skip_space();
    if (at_end()) return false;
    char c = src_[pos_];
    if (is_letter(c) || is_digit(c) || c == '(' || c == '{' || c == '?') return true;
    if (auto cmd = peek_command()) return command_starts_operand(cmd->name);
    return false;
  }

  Expr mul() {
    std::vector<Expr> run;
    run.push_back(unary());
    while (true) {
      skip_space();
      if (at_end()) break;
      char c = src_[pos_];
      if (c == '*') {
        ++pos_;
        run.push_back(unary());
      } else if (c == '/') {
        ++pos_;
        Expr lhs = make_run(Op::Times, std::move(run));
        run.clear();
        run.push_back(Expr::apply(Op::Divide, {std::move(lhs), unary()}));
      } else if (peek_command_named("cdot") || peek_command_named("times")) {
        pos_ = peek_command()->end;
        run.push_back(unary());
      } else if (starts_operand()) {
        run.push_back(unary());
      } else {
        break;
      }
    }
    return make_run(Op::Times, std::move(run));
  }

  Expr unary() {
    DepthGuard guard(*this);
    skip_space();
    if (!at_end() && src_[pos_] == '-') {
      ++pos_;
      return Expr::apply(Op::Negate, {unary()});
    }
    return postfix();
  }

  Expr postfix() {
    Expr base = atom();
    std::optional<Expr> sub;
    std::optional<Expr> sup;
    while (true) {
      skip_space();
      if (at_end()) break;
      char c = src_[pos_];
      if (c != '_' && c != '^') break;
      auto& slot = (c == '_') ? sub : sup;
      if (slot) {
        throw ParseError(pos_, ParseErrorKind::UnexpectedToken,
                         c == '_' ? "double subscript" : "double superscript");
      }
      ++pos_;
      slot = script_arg();
    }
    if (sub) base = Expr::apply(Op::Subscript, {std::move(base), std::move(*sub)});
    if (sup) base = Expr::apply(Op::Power, {std::move(base), std::move(*sup)});
    return base;
  }

  // Argument of _, ^, \frac and \sqrt: one character, one command, or a group.
  Expr script_arg() {
    skip_space();
    if (at_end()) fail_unexpected();
    char c = src_[pos_];
    if (c == '{') return group('{', '}');
    if (is_letter(c)) {
      ++pos_;
      return Expr::identifier(std::string(1, c));
    }
    if (is_digit(c)) {
      ++pos_;
      return Expr::number(std::string(1, c));
    }
    if (c == '?') return wildcard();
    if (auto cmd = peek_command()) {
      if (is_greek_name(cmd->name)) {
        pos_ = cmd->end;
        return Expr::identifier(std::string(cmd->name));
      }
      if (!command_starts_operand(cmd->name)) fail_unexpected();
      if (!is_known_operand_command(cmd->name)) unknown_command(*cmd);
    }
    if (c == '}' || c == ')') {
      throw ParseError(pos_, ParseErrorKind::UnbalancedBrace, std::string("unmatched '") + c + "'");
    }
    fail_unexpected();
  }

  Expr group(char open, char close) {
    std::size_t start = pos_;
    ++pos_;
    if (at_group_end() && !at_end() && src_[pos_] == close) {
      throw ParseError(pos_, ParseErrorKind::UnexpectedToken, "empty group");
    }
    Expr inner = [&] {
      try {
        return annotated();
      } catch (const ParseError& e) {
        // Running out of input inside a group means the group is unclosed.
        if (e.kind() == ParseErrorKind::UnexpectedToken && e.position() >= src_.size()) {
          throw ParseError(start, ParseErrorKind::UnbalancedBrace, std::string("unclosed '") + open + "'");
        }
        throw;
      }
    }();
    skip_space();
    if (at_end()) {
      throw ParseError(start, ParseErrorKind::UnbalancedBrace, std::string("unclosed '") + open + "'");
    }
    if (src_[pos_] != close) {
      throw ParseError(pos_, ParseErrorKind::UnbalancedBrace,
                       std::string("expected '") + close + "' to close '" + open + "' at " +
                           std::to_string(start));
    }
    ++pos_;
    return inner;
  }

  Expr wildcard() {
    std::size_t at = pos_;
    if (!allow_wildcards_) {
      throw ParseError(at, ParseErrorKind::UnexpectedToken,
                       "placeholders are only allowed in queries");
    }
    ++pos_;
    if (at_end() || !is_letter(src_[pos_])) {
      fail_unexpected();
    }
    return Expr::wildcard(std::string(1, src_[pos_++]));
  }

  Expr text_atom() {
    skip_space();
    auto cmd = peek_command();
    pos_ = cmd->end;
    while (!at_end() && (src_[pos_] == ' ' || src_[pos_] == '\t')) ++pos_;
    if (at_end() || src_[pos_] != '{') fail_unexpected();
    std::size_t open = pos_++;
    std::size_t level = 1;
    std::size_t content_start = pos_;
    while (!at_end()) {
      char c = src_[pos_];
      if (c == '\\' && pos_ + 1 < src_.size()) {
        pos_ += 2;
        continue;
      }
      if (c == '{') ++level;
      if (c == '}' && --level == 0) break;
      ++pos_;
    }
    if (at_end()) throw ParseError(open, ParseErrorKind::UnbalancedBrace, "unclosed \\text group");
    std::string content(src_.substr(content_start, pos_ - content_start));
    ++pos_;
    return Expr::text(std::move(content));
  }

  static bool is_known_operand_command(std::string_view name) {
    return is_greek_name(name) || is_function_name(name) || name == "frac" || name == "sqrt" ||
           name == "dots" || name == "ldots" || name == "cdots" || name == "text";
  }

  [[noreturn]] void unknown_command(const Command& cmd) const {
    throw ParseError(cmd.start, ParseErrorKind::UnknownCommand,
                     "unknown command '\\" + std::string(cmd.name) + "'");
  }

  Expr atom() {
    skip_space();
    if (at_end()) fail_unexpected();
    char c = src_[pos_];
    if (is_letter(c)) {
      ++pos_;
      return Expr::identifier(std::string(1, c));
    }
    if (is_digit(c)) return number();
    if (c == '(') return group('(', ')');
    if (c == '{') return group('{', '}');
    if (c == '?') return wildcard();
    if (c == ')' || c == '}') {
      throw ParseError(pos_, ParseErrorKind::UnbalancedBrace, std::string("unmatched '") + c + "'");
    }
    auto cmd = peek_command();
    if (!cmd) fail_unexpected();
    const std::string_view name = cmd->name;
    if (is_greek_name(name)) {
      pos_ = cmd->end;
      return Expr::identifier(std::string(name));
    }
    if (name == "text") return text_atom();
    if (name == "dots" || name == "ldots" || name == "cdots") {
      pos_ = cmd->end;
      return Expr::apply(Op::Ellipsis, {});
    }
    if (name == "frac") {
      pos_ = cmd->end;
      Expr num = script_arg();
      Expr den = script_arg();
      return Expr::apply(Op::Divide, {std::move(num), std::move(den)});
    }
    if (name == "sqrt") {
      pos_ = cmd->end;
      return Expr::function("sqrt", {script_arg()});
    }
    if (is_function_name(name)) {
      pos_ = cmd->end;
      std::optional<Expr> exponent;
      skip_space();
      if (!at_end() && src_[pos_] == '^') {
        ++pos_;
        exponent = script_arg();
      }
      Expr call = Expr::function(std::string(name), {unary()});
      if (exponent) return Expr::apply(Op::Power, {std::move(call), std::move(*exponent)});
      return call;
    }
    if (name.empty() || !command_starts_operand(name)) fail_unexpected();
    unknown_command(*cmd);
  }

  Expr number() {
    std::size_t start = pos_;
    while (!at_end() && is_digit(src_[pos_])) ++pos_;
    if (pos_ + 1 < src_.size() && src_[pos_] == '.' && is_digit(src_[pos_ + 1])) {
      ++pos_;
      while (!at_end() && is_digit(src_[pos_])) ++pos_;
    }
    return Expr::number(std::string(src_.substr(start, pos_ - start)));
  }

  std::string_view src_;
  bool allow_wildcards_;
  std::size_t pos_ = 0;
  std::size_t depth_ = 0;
};

// ---------------------------------------------------------------------------
// Printing

enum Level : int {
  kAnnotated = 0,
  kSequence = 1,
  kEq = 2,
  kMod = 3,
  kAdd = 4,
  kMul = 5,
  kUnary = 6,
  kAtom = 7,
};

bool is_negative_number(const Expr& e) {
  return e.kind() == NodeKind::Number && !e.symbol().empty() && e.symbol().front() == '-';
}

bool is_minus_one(const Expr& e) { return e.kind() == NodeKind::Number && e.symbol() == "-1"; }

// A product with -1 factors, as produced by canonicalization of a - b and
// -x. Canonical order puts the -1s after compound and identifier factors.
bool is_negation_product(const Expr& e) {
  return e.is_apply(Op::Times) && std::any_of(e.args().begin(), e.args().end(), is_minus_one) &&
         !std::all_of(e.args().begin(), e.args().end(), is_minus_one);
}

struct Negation {
  std::size_t signs = 0;
  std::vector<Expr> rest;
};

// Splits a negation product into its -1 count and the other factors.
Negation negation_of(const Expr& e) {
  Negation n;
  for (const Expr& f : e.args()) {
    if (is_minus_one(f)) ++n.signs;
    else n.rest.push_back(f);
  }
  return n;
}

int level_of(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::Number:
      return is_negative_number(e) ? kUnary : kAtom;
    case NodeKind::Identifier:
    case NodeKind::Text:
    case NodeKind::Wildcard:
      return kAtom;
    case NodeKind::Apply:
      break;
  }
  switch (e.op()) {
    case Op::Annotate:
      return kAnnotated;
    case Op::Sequence:
      return kSequence;
    case Op::Eq:
      return kEq;
    case Op::Mod:
      return kMod;
    case Op::Plus:
    case Op::Minus:
      return kAdd;
    case Op::Times:
      return is_negation_product(e) ? kUnary : kMul;
    case Op::Negate:
      return kUnary;
    case Op::Divide:
    case Op::Power:
    case Op::Subscript:
    case Op::Ellipsis:
    case Op::Function:
      return kAtom;
  }
  return kAtom;
}

std::string print(const Expr& e);

std::string at_level(const Expr& e, int level) {
  if (level_of(e) >= level) return print(e);
  return "(" + print(e) + ")";
}

std::string braced(const Expr& e) { return "{" + print(e) + "}"; }

std::string script_base(const Expr& e) {
  bool simple = (e.kind() == NodeKind::Identifier || e.kind() == NodeKind::Wildcard ||
                 (e.kind() == NodeKind::Number && !is_negative_number(e)));
  return simple ? print(e) : braced(e);
}

std::string print_identifier(const std::string& name) {
  if (name.size() == 1) return name;
  return "\\" + name;
}

std::string join_factors(const std::vector<Expr>& factors, std::size_t first) {
  std::string out;
  for (std::size_t i = first; i < factors.size(); ++i) {
    const Expr& f = factors[i];
    if (i == first) {
      out += at_level(f, kUnary);
      continue;
    }
    out += (f.kind() == NodeKind::Text) ? " \\cdot " : " ";
    out += at_level(f, kAtom);
  }
  return out;
}

std::string print_apply(const Expr& e) {
  const auto& a = e.args();
  switch (e.op()) {
    case Op::Annotate: {
      std::string out = at_level(a[0], kAnnotated);
      const Expr& tail = a[1];
      if (tail.kind() == NodeKind::Text) return out + " \\text{" + tail.symbol() + "}";
      if (tail.is_apply(Op::Sequence) && tail.args().front().kind() == NodeKind::Text &&
          tail.args().size() >= 2) {
        out += " \\text{" + tail.args().front().symbol() + "} ";
        for (std::size_t i = 1; i < tail.args().size(); ++i) {
          if (i > 1) out += ", ";
          out += at_level(tail.args()[i], kEq);
        }
        return out;
      }
      return out + " \\text{} " + at_level(tail, kSequence);
    }
    case Op::Sequence: {
      std::string out;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (i) out += ", ";
        out += at_level(a[i], kEq);
      }
      return out;
    }
    case Op::Eq: {
      std::string out;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (i) out += " = ";
        out += at_level(a[i], kMod);
      }
      return out;
    }
    case Op::Mod:
      return at_level(a[0], kMod) + " \\bmod " + at_level(a[1], kAdd);
    case Op::Plus: {
      std::string out = a[0].is_apply(Op::Plus) ? "(" + print(a[0]) + ")" : at_level(a[0], kAdd);
      for (std::size_t i = 1; i < a.size(); ++i) {
        if (is_negation_product(a[i])) {
          const Negation n = negation_of(a[i]);
          out += " - " + std::string(n.signs - 1, '-');
          if (n.rest.size() == 1) {
            out += at_level(n.rest.front(), n.signs > 1 ? kUnary : kMul);
          } else {
            out += join_factors(n.rest, 0);
          }
          continue;
        }
        out += " + " + at_level(a[i], kMul);
      }
      return out;
    }
    case Op::Minus:
      return at_level(a[0], kAdd) + " - " + at_level(a[1], kMul);
    case Op::Times: {
      if (is_negation_product(e)) {
        const Negation n = negation_of(e);
        const std::string signs(n.signs, '-');
        if (n.rest.size() == 1) return signs + at_level(n.rest.front(), kUnary);
        return signs + join_factors(n.rest, 0);
      }
      return join_factors(a, 0);
    }
    case Op::Negate:
      return "-" + at_level(a[0], kUnary);
    case Op::Divide:
      return "\\frac" + braced(a[0]) + braced(a[1]);
    case Op::Power:
      if (a[0].is_apply(Op::Subscript)) {
        const auto& s = a[0].args();
        return script_base(s[0]) + "_" + braced(s[1]) + "^" + braced(a[1]);
      }
      return script_base(a[0]) + "^" + braced(a[1]);
    case Op::Subscript:
      return script_base(a[0]) + "_" + braced(a[1]);
    case Op::Ellipsis:
      return "\\dots";
    case Op::Function: {
      std::string out = "\\" + e.symbol() + "{";
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (i) out += ", ";
        out += at_level(a[i], kEq);
      }
      return out + "}";
    }
  }
  return {};
}

std::string print(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::Number:
      return e.symbol();
    case NodeKind::Identifier:
      return print_identifier(e.symbol());
    case NodeKind::Text:
      return "\\text{" + e.symbol() + "}";
    case NodeKind::Wildcard:
      return "?" + e.symbol();
    case NodeKind::Apply:
      return print_apply(e);
  }
  return {};
}

}  // namespace

std::string_view parse_error_kind_name(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::UnexpectedToken:
      return "unexpected-token";
    case ParseErrorKind::UnbalancedBrace:
      return "unbalanced-brace";
    case ParseErrorKind::UnknownCommand:
      return "unknown-command";
    case ParseErrorKind::EmptyInput:
      return "empty-input";
  }
  return "unexpected-token";
}

ParseError::ParseError(std::size_t position, ParseErrorKind kind, std::string message)
    : std::runtime_error(std::to_string(position) + ": " +
                         std::string(parse_error_kind_name(kind)) + ": " + message),
      position_(position),
      kind_(kind),
      message_(std::move(message)) {}

Json ParseError::to_json() const {
  Json j = Json::object();
  j["position"] = position_;
  j["kind"] = std::string(parse_error_kind_name(kind_));
  j["message"] = message_;
  return j;
}

Expr parse_formula(std::string_view src) { return Parser(src, false).parse(); }

Expr parse_query(std::string_view src) { return Parser(src, true).parse(); }

std::string to_latex(const Expr& e) { return print(e); }

bool is_greek_name(std::string_view name) {
  return std::find(kGreek.begin(), kGreek.end(), name) != kGreek.end();
}

}  // namespace mathsearch
