#include "lexer.hpp"

#include <cctype>

#include "dbtab/errors.hpp"

namespace dbtab::detail {

std::vector<Token> tokenize(const std::string& text, int first_line) {
  std::vector<Token> out;
  int line = first_line;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < text.size()) {
    char ch = text[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      advance(1);
      continue;
    }
    if (ch == '#') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    int tl = line, tc = col;
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
      out.push_back({Tok::kIdent, text.substr(i, j - i), tl, tc});
      advance(j - i);
      continue;
    }
    if (ch == '\'') {
      std::string value;
      advance(1);
      bool closed = false;
      while (i < text.size()) {
        char c = text[i];
        if (c == '\n') break;
        if (c == '\\' && i + 1 < text.size()) {
          value += text[i + 1];
          advance(2);
          continue;
        }
        if (c == '\'') {
          advance(1);
          closed = true;
          break;
        }
        value += c;
        advance(1);
      }
      if (!closed) throw ParseError("unterminated quoted constant", tl, tc);
      out.push_back({Tok::kQuoted, value, tl, tc});
      continue;
    }
    if (ch == '-' && i + 1 < text.size() && text[i + 1] == '>') {
      out.push_back({Tok::kArrow, "->", tl, tc});
      advance(2);
      continue;
    }
    Tok kind;
    switch (ch) {
      case '(': kind = Tok::kLParen; break;
      case ')': kind = Tok::kRParen; break;
      case ',': kind = Tok::kComma; break;
      case '.': kind = Tok::kDot; break;
      case '~': kind = Tok::kNot; break;
      case '&': kind = Tok::kAnd; break;
      case '|': kind = Tok::kOr; break;
      case '=': kind = Tok::kEq; break;
      default:
        throw ParseError(std::string("unexpected character '") + ch + "'", tl, tc);
    }
    out.push_back({kind, std::string(1, ch), tl, tc});
    advance(1);
  }
  out.push_back({Tok::kEnd, "", line, col});
  return out;
}

std::string describe(const Token& t) {
  if (t.kind == Tok::kEnd) return "end of input";
  if (t.kind == Tok::kQuoted) return "'" + t.text + "'";
  return "'" + t.text + "'";
}

}  // namespace dbtab::detail
