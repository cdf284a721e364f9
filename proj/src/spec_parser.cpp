#include <charconv>
#include <set>

#include "protocheck/errors.hpp"
#include "protocheck/specdsl.hpp"

namespace protocheck::spec {

namespace {

// Parenthesis/not/operator recursion guard, independent of the semantic
// depth limit so that hostile input cannot exhaust the stack.
constexpr std::size_t kMaxSyntaxNesting = 64;

enum class Tok { Ident, Int, String, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t number = 0;
  std::size_t line = 1;
  std::size_t column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      Token t;
      t.line = line_;
      t.column = column_;
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (is_ident_start(c)) {
        t.kind = Tok::Ident;
        while (pos_ < src_.size() && is_ident_char(src_[pos_])) t.text += advance();
      } else if (c >= '0' && c <= '9') {
        t.kind = Tok::Int;
        while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') t.text += advance();
        if (pos_ < src_.size() && is_ident_char(src_[pos_])) {
          throw ParseError(t.line, t.column, "malformed number");
        }
        if (t.text.size() > 9) throw ParseError(t.line, t.column, "integer too large");
        std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      } else if (c == '"') {
        t.kind = Tok::String;
        t.text = read_string(t.line, t.column);
      } else if (std::string_view("{}[](),;:+-").find(c) != std::string_view::npos) {
        t.kind = Tok::Punct;
        t.text = std::string(1, advance());
      } else {
        throw ParseError(t.line, t.column,
                         "unexpected character (byte " +
                             std::to_string(static_cast<unsigned char>(c)) + ")");
      }
      out.push_back(std::move(t));
    }
  }

 private:
  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

  char advance() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    return c;
  }

  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string read_string(std::size_t line, std::size_t column) {
    advance();  // opening quote
    std::string out;
    for (;;) {
      if (pos_ >= src_.size() || src_[pos_] == '\n') {
        throw ParseError(line, column, "unterminated string");
      }
      const char c = advance();
      if (c == '"') return out;
      if (c == '\\') {
        if (pos_ >= src_.size()) throw ParseError(line, column, "unterminated string");
        const std::size_t esc_col = column_;
        const char e = advance();
        switch (e) {
          case '"':
          case '\\':
            out += e;
            break;
          case 'n':
            out += '\n';
            break;
          case 't':
            out += '\t';
            break;
          default:
            throw ParseError(line_, esc_col, std::string("unknown escape '\\") + e + "'");
        }
      } else {
        out += c;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

const std::set<std::string, std::less<>> kKeywords = {
    "req",      "flags", "when",   "severity",  "describe", "detect", "eventually", "always",
    "whenever", "then",  "within", "and",       "or",       "not",    "mandatory",  "advisory",
    "calltaker", "caller", "both",
};

struct Scope {
  bool anchored = false;
  std::optional<std::int64_t> horizon;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, const ParseOptions& options)
      : toks_(std::move(tokens)), options_(options) {}

  RequirementSet document() {
    RequirementSet set;
    while (peek().kind != Tok::End) {
      if (is_word("flags")) {
        flags_decl(set);
      } else if (is_word("req")) {
        set.requirements.push_back(requirement(set));
      } else {
        fail(peek(), "expected 'req' or 'flags', found " + describe_tok(peek()));
      }
    }
    return set;
  }

 private:
  [[noreturn]] static void fail(const Token& t, const std::string& msg) {
    throw ParseError(t.line, t.column, msg);
  }

  static std::string describe_tok(const Token& t) {
    switch (t.kind) {
      case Tok::End:
        return "end of input";
      case Tok::String:
        return "string";
      case Tok::Int:
        return "'" + t.text + "'";
      default:
        return "'" + t.text + "'";
    }
  }

  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool is_word(std::string_view w, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Ident && peek(ahead).text == w;
  }
  bool is_punct(char c) const { return peek().kind == Tok::Punct && peek().text[0] == c; }

  void expect_punct(char c) {
    if (!is_punct(c)) fail(peek(), std::string("expected '") + c + "', found " + describe_tok(peek()));
    next();
  }
  void expect_word(std::string_view w) {
    if (!is_word(w)) fail(peek(), "expected '" + std::string(w) + "', found " + describe_tok(peek()));
    next();
  }
  const Token& expect_ident(const char* what) {
    if (peek().kind != Tok::Ident) fail(peek(), std::string("expected ") + what + ", found " + describe_tok(peek()));
    return next();
  }
  std::int64_t expect_int() {
    if (peek().kind != Tok::Int) fail(peek(), "expected integer, found " + describe_tok(peek()));
    return next().number;
  }
  std::string expect_string(const char* what) {
    if (peek().kind != Tok::String) fail(peek(), std::string("expected ") + what + ", found " + describe_tok(peek()));
    return next().text;
  }

  void enter(const Token& at) {
    if (++nesting_ > kMaxSyntaxNesting) fail(at, "expression nested too deeply");
  }
  void leave() { --nesting_; }

  void flags_decl(RequirementSet& set) {
    const Token& kw = next();
    expect_punct(':');
    for (;;) {
      const Token& id = expect_ident("flag identifier");
      if (!is_flag_identifier(id.text)) fail(id, "flag '" + id.text + "' is not lowercase snake-case");
      if (declared_.count(id.text)) fail(id, "flag '" + id.text + "' declared twice");
      declared_.insert(id.text);
      set.flags.push_back(id.text);
      // The declaration ends at the end of its line.
      if (is_punct(',') && peek().line == kw.line) {
        next();
        continue;
      }
      break;
    }
  }

  Requirement requirement(const RequirementSet& set) {
    next();  // req
    const Token& id = expect_ident("requirement id");
    if (kKeywords.count(id.text)) fail(id, "'" + id.text + "' is a keyword");
    if (set.find(id.text)) fail(id, "duplicate requirement id '" + id.text + "'");
    Requirement req;
    req.id = id.text;
    req.pos = {id.line, id.column};
    expect_punct('{');
    bool seen_severity = false, seen_describe = false;
    for (;;) {
      if (is_word("severity")) {
        const Token& kw = next();
        if (seen_severity) fail(kw, "duplicate severity clause");
        seen_severity = true;
        if (is_word("mandatory")) {
          req.severity = Severity::Mandatory;
        } else if (is_word("advisory")) {
          req.severity = Severity::Advisory;
        } else {
          fail(peek(), "expected 'mandatory' or 'advisory', found " + describe_tok(peek()));
        }
        next();
        expect_punct(';');
      } else if (is_word("describe")) {
        const Token& kw = next();
        if (seen_describe) fail(kw, "duplicate describe clause");
        seen_describe = true;
        req.description = expect_string("description string");
        expect_punct(';');
      } else if (is_word("when")) {
        const Token& kw = next();
        if (req.guard) fail(kw, "duplicate when clause");
        req.guard = guard_or();
        expect_punct(';');
      } else {
        break;
      }
    }
    const Token& formula_start = peek();
    req.formula = formula_or(Scope{});
    expect_punct('}');
    const auto d = depth(req.formula);
    if (d > options_.max_depth) {
      fail(formula_start, "formula nesting depth " + std::to_string(d) + " exceeds maximum " +
                              std::to_string(options_.max_depth));
    }
    return req;
  }

  Guard guard_or() {
    enter(peek());
    std::vector<Guard> terms{guard_and()};
    while (is_word("or")) {
      next();
      terms.push_back(guard_and());
    }
    leave();
    if (terms.size() == 1) return std::move(terms.front());
    return Guard{GuardOr{std::move(terms)}};
  }

  Guard guard_and() {
    std::vector<Guard> terms{guard_unary()};
    while (is_word("and")) {
      next();
      terms.push_back(guard_unary());
    }
    if (terms.size() == 1) return std::move(terms.front());
    return Guard{GuardAnd{std::move(terms)}};
  }

  Guard guard_unary() {
    if (is_word("not")) {
      enter(next());
      Guard inner = guard_unary();
      leave();
      return Guard{GuardNot{std::move(inner)}};
    }
    if (is_punct('(')) {
      next();
      Guard g = guard_or();
      expect_punct(')');
      return g;
    }
    const Token& id = expect_ident("flag identifier");
    if (kKeywords.count(id.text)) fail(id, "expected flag identifier, found keyword '" + id.text + "'");
    if (!declared_.count(id.text)) fail(id, "undeclared flag '" + id.text + "'");
    return flag(id.text);
  }

  Formula formula_or(const Scope& scope) {
    enter(peek());
    std::vector<Formula> terms{formula_and(scope)};
    while (is_word("or")) {
      next();
      terms.push_back(formula_and(scope));
    }
    leave();
    return disj(std::move(terms));
  }

  Formula formula_and(const Scope& scope) {
    std::vector<Formula> terms{formula_unary(scope)};
    while (is_word("and")) {
      next();
      terms.push_back(formula_unary(scope));
    }
    return conj(std::move(terms));
  }

  Formula formula_unary(const Scope& scope) {
    const Token& t = peek();
    if (is_word("not")) {
      enter(next());
      Formula inner = formula_unary(scope);
      leave();
      return negate(std::move(inner));
    }
    if (is_punct('(')) {
      next();
      Formula f = formula_or(scope);
      expect_punct(')');
      return f;
    }
    if (is_word("detect")) return Formula{detect_atom(scope)};
    if (is_word("eventually") || is_word("always")) {
      const bool is_eventually = is_word("eventually");
      enter(next());
      Window w = window(scope);
      expect_punct('(');
      Formula inner = formula_or(Scope{true, std::nullopt});
      expect_punct(')');
      leave();
      return is_eventually ? eventually(w, std::move(inner)) : always(w, std::move(inner));
    }
    if (is_word("whenever")) {
      enter(next());
      if (!is_word("detect")) fail(peek(), "expected 'detect' after 'whenever'");
      Detect trigger = detect_atom(scope);
      expect_word("then");
      expect_word("within");
      const Token& h = peek();
      const std::int64_t horizon = expect_int();
      if (horizon < 1) fail(h, "horizon must be at least 1");
      Formula response = formula_unary(Scope{true, horizon});
      leave();
      return whenever(std::move(trigger), std::move(response), horizon);
    }
    if (t.kind == Tok::Ident && !kKeywords.count(t.text)) fail(t, "unknown keyword '" + t.text + "'");
    fail(t, "expected formula, found " + describe_tok(t));
  }

  Detect detect_atom(const Scope& scope) {
    next();  // detect
    Window w = window(scope);
    const Token& label = peek();
    std::string action = expect_string("action label string");
    if (action.empty()) fail(label, "empty action label");
    return Detect{w, std::move(action)};
  }

  Bound bound() {
    const Token& t = peek();
    if (t.kind == Tok::Int) return Bound::index(next().number);
    if (is_word("T")) {
      next();
      if (is_punct('-')) {
        next();
        return Bound::end_minus(expect_int());
      }
      return Bound::end();
    }
    if (is_word("t")) {
      next();
      if (is_punct('+')) {
        next();
        return Bound::anchor(expect_int());
      }
      return Bound::anchor(0);
    }
    fail(t, "expected window bound (integer, T, T-k, t or t+k), found " + describe_tok(t));
  }

  Window window(const Scope& scope) {
    const Token& p = peek();
    Window w;
    if (is_word("calltaker")) {
      w.party = Party::CallTaker;
    } else if (is_word("caller")) {
      w.party = Party::Caller;
    } else if (is_word("both")) {
      w.party = Party::Both;
    } else {
      fail(p, "expected party (calltaker, caller or both), found " + describe_tok(p));
    }
    next();
    const Token& open = peek();
    expect_punct('[');
    w.lo = bound();
    expect_punct(',');
    w.hi = bound();
    expect_punct(']');
    const bool relative = w.lo.kind == Bound::Kind::Anchor || w.hi.kind == Bound::Kind::Anchor;
    w.mode = relative ? WindowMode::RelativeToTrigger : WindowMode::Absolute;
    if (auto problem = window_problem(w)) fail(open, *problem);
    if (relative) {
      if (!scope.anchored) fail(open, "relative window needs an enclosing eventually, always or whenever");
      if (scope.horizon && w.hi.value > *scope.horizon) {
        fail(open, "relative window extends past horizon " + std::to_string(*scope.horizon));
      }
    }
    return w;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t nesting_ = 0;
  std::set<std::string> declared_;
  ParseOptions options_;
};

}  // namespace

RequirementSet parse_spec(std::string_view text, const ParseOptions& options) {
  Parser parser(Lexer(text).run(), options);
  return parser.document();
}

}  // namespace protocheck::spec
