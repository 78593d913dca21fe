#include <cctype>
#include <sstream>

#include "dbtab/errors.hpp"
#include "dbtab/formula.hpp"
#include "lexer.hpp"

namespace dbtab {

namespace {

using detail::Tok;
using detail::Token;

class Parser {
 public:
  Parser(std::vector<Token> tokens, Schema& schema, bool extend)
      : toks_(std::move(tokens)), schema_(schema), extend_(extend) {}

  Formula parse_all() {
    Formula f = formula();
    if (peek().kind != Tok::kEnd) fail("unexpected " + detail::describe(peek()));
    return f;
  }

 private:
  const Token& peek(std::size_t k = 0) const {
    std::size_t i = std::min(pos_ + k, toks_.size() - 1);
    return toks_[i];
  }
  const Token& take() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, peek().line, peek().column);
  }
  void expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail(std::string("expected ") + what + ", got " + detail::describe(peek()));
    take();
  }
  bool is_keyword(const Token& t) const {
    return t.kind == Tok::kIdent && (t.text == "forall" || t.text == "exists");
  }

  Formula formula() {
    Formula lhs = disjunction();
    if (peek().kind == Tok::kArrow) {
      take();
      return Formula::Implies(lhs, formula());
    }
    return lhs;
  }

  Formula disjunction() {
    Formula f = conjunction();
    while (peek().kind == Tok::kOr) {
      take();
      f = Formula::Or(f, conjunction());
    }
    return f;
  }

  Formula conjunction() {
    Formula f = unary();
    while (peek().kind == Tok::kAnd) {
      take();
      f = Formula::And(f, unary());
    }
    return f;
  }

  Formula unary() {
    if (peek().kind == Tok::kNot) {
      take();
      return Formula::Not(unary());
    }
    if (is_keyword(peek()) && peek(1).kind == Tok::kIdent) return quantified();
    return primary();
  }

  Formula quantified() {
    bool universal = take().text == "forall";
    std::vector<std::string> vars;
    for (;;) {
      const Token& v = peek();
      if (v.kind != Tok::kIdent || !std::isupper(static_cast<unsigned char>(v.text[0]))) {
        fail("expected variable (uppercase identifier), got " + detail::describe(v));
      }
      vars.push_back(take().text);
      if (peek().kind != Tok::kComma) break;
      take();
    }
    expect(Tok::kDot, "'.' after quantified variables");
    Formula body = formula();
    for (auto it = vars.rbegin(); it != vars.rend(); ++it) {
      body = universal ? Formula::Forall(*it, body) : Formula::Exists(*it, body);
    }
    return body;
  }

  Formula primary() {
    const Token& t = peek();
    if (t.kind == Tok::kLParen) {
      take();
      Formula f = formula();
      expect(Tok::kRParen, "')'");
      return f;
    }
    if (t.kind == Tok::kIdent && peek(1).kind == Tok::kLParen && !is_keyword(t)) return atom();
    if (t.kind == Tok::kIdent || t.kind == Tok::kQuoted) {
      Term lhs = term();
      expect(Tok::kEq, "'=' or '(' after term");
      Term rhs = term();
      return Formula::Equal(lhs, rhs);
    }
    fail("expected formula, got " + detail::describe(t));
  }

  Formula atom() {
    const Token name = take();
    take();  // '('
    std::vector<Term> args;
    if (peek().kind == Tok::kRParen) fail("predicate " + name.text + " needs at least one argument");
    for (;;) {
      args.push_back(term());
      if (peek().kind == Tok::kComma) {
        take();
        continue;
      }
      break;
    }
    expect(Tok::kRParen, "')' or ','");
    int arity = static_cast<int>(args.size());
    if (!schema_.contains(name.text)) {
      if (!extend_) throw ParseError("unknown predicate " + name.text, name.line, name.column);
      schema_.add(name.text, arity);
    } else if (schema_.arity(name.text) != arity) {
      throw ParseError("arity mismatch: " + name.text + " has arity " +
                           std::to_string(schema_.arity(name.text)) + ", used with " +
                           std::to_string(arity),
                       name.line, name.column);
    }
    return Formula::Atom(name.text, std::move(args));
  }

  Term term() {
    const Token& t = peek();
    if (t.kind == Tok::kQuoted) return Term::Constant(take().text);
    if (t.kind != Tok::kIdent || is_keyword(t)) fail("expected term, got " + detail::describe(t));
    if (peek(1).kind == Tok::kLParen) fail("function symbols are not allowed in input");
    std::string text = take().text;
    if (std::isupper(static_cast<unsigned char>(text[0]))) return Term::Variable(text);
    return Term::Constant(text);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Schema& schema_;
  bool extend_;
};

}  // namespace

Formula parse_formula(const std::string& text, Schema& schema, ParseOptions options) {
  Parser p(detail::tokenize(text, options.first_line), schema, options.extend_schema);
  return p.parse_all();
}

Formula parse_formula(const std::string& text, const Schema& schema) {
  Schema copy = schema;
  return parse_formula(text, copy, ParseOptions{});
}

std::vector<Formula> parse_formula_lines(const std::string& text, Schema& schema,
                                         ParseOptions options) {
  std::vector<Formula> out;
  std::istringstream in(text);
  std::string line;
  int number = options.first_line;
  while (std::getline(in, line)) {
    auto tokens = detail::tokenize(line, number);
    if (tokens.size() > 1) {
      Parser p(std::move(tokens), schema, options.extend_schema);
      out.push_back(p.parse_all());
    }
    ++number;
  }
  return out;
}

}  // namespace dbtab
