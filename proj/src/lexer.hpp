#pragma once

#include <string>
#include <vector>

namespace dbtab::detail {

enum class Tok {
  kIdent,
  kQuoted,
  kLParen,
  kRParen,
  kComma,
  kDot,
  kNot,
  kAnd,
  kOr,
  kArrow,
  kEq,
  kEnd
};

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;
};

// Tokenizes formula and fact text. '#' starts a comment running to end of line.
std::vector<Token> tokenize(const std::string& text, int first_line);

std::string describe(const Token& t);

}  // namespace dbtab::detail
