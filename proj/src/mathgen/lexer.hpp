#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dataforge/mathgen/ast.hpp"

namespace dataforge::mathgen {

enum class Tok {
  identifier,
  number,  // digits with an optional fractional part
  string,
  semicolon,
  comma,
  colon,
  lbracket,
  rbracket,
  lbrace,
  rbrace,
  lparen,
  rparen,
  assign,
  eq,
  ne,
  lt,
  le,
  gt,
  ge,
  plus,
  minus,
  star,
  slash,
  slashslash,
  percent,
  end,
};

struct Token {
  Tok kind;
  std::string text;  // identifier name, number digits, or decoded string
  SourcePos pos;
};

std::vector<Token> lex(std::string_view source);
const char* describe(Tok kind);

}  // namespace dataforge::mathgen
