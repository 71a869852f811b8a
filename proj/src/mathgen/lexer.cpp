#include "lexer.hpp"

#include <cctype>

namespace dataforge::mathgen {

const char* describe(Tok kind) {
  switch (kind) {
    case Tok::identifier: return "identifier";
    case Tok::number: return "number";
    case Tok::string: return "string";
    case Tok::semicolon: return "';'";
    case Tok::comma: return "','";
    case Tok::colon: return "':'";
    case Tok::lbracket: return "'['";
    case Tok::rbracket: return "']'";
    case Tok::lbrace: return "'{'";
    case Tok::rbrace: return "'}'";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::assign: return "'='";
    case Tok::eq: return "'=='";
    case Tok::ne: return "'!='";
    case Tok::lt: return "'<'";
    case Tok::le: return "'<='";
    case Tok::gt: return "'>'";
    case Tok::ge: return "'>='";
    case Tok::plus: return "'+'";
    case Tok::minus: return "'-'";
    case Tok::star: return "'*'";
    case Tok::slash: return "'/'";
    case Tok::slashslash: return "'//'";
    case Tok::percent: return "'%'";
    case Tok::end: return "end of input";
  }
  return "token";
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  SourcePos pos;
  const auto advance = [&](std::size_t n = 1) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++pos.line;
        pos.column = 1;
      } else {
        ++pos.column;
      }
    }
  };
  const auto peek = [&](std::size_t off = 0) -> char { return i + off < src.size() ? src[i + off] : '\0'; };

  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance();
      continue;
    }
    const SourcePos start = pos;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string id;
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') {
        id.push_back(peek());
        advance();
      }
      out.push_back({Tok::identifier, std::move(id), start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string num;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        num.push_back(peek());
        advance();
      }
      if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        num.push_back('.');
        advance();
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
          num.push_back(peek());
          advance();
        }
      }
      out.push_back({Tok::number, std::move(num), start});
      continue;
    }
    if (c == '"') {
      advance();
      std::string text;
      for (;;) {
        if (i >= src.size()) throw ParseError("unterminated string literal", start);
        const char d = peek();
        if (d == '"') {
          advance();
          break;
        }
        if (d == '\\') {
          const char e = peek(1);
          if (e == '"' || e == '\\') {
            text.push_back(e);
          } else if (e == 'n') {
            text.push_back('\n');
          } else {
            throw ParseError(std::string("unknown escape '\\") + e + "'", pos);
          }
          advance(2);
          continue;
        }
        text.push_back(d);
        advance();
      }
      out.push_back({Tok::string, std::move(text), start});
      continue;
    }
    Tok kind;
    std::size_t len = 1;
    switch (c) {
      case ';': kind = Tok::semicolon; break;
      case ',': kind = Tok::comma; break;
      case ':': kind = Tok::colon; break;
      case '[': kind = Tok::lbracket; break;
      case ']': kind = Tok::rbracket; break;
      case '{': kind = Tok::lbrace; break;
      case '}': kind = Tok::rbrace; break;
      case '(': kind = Tok::lparen; break;
      case ')': kind = Tok::rparen; break;
      case '+': kind = Tok::plus; break;
      case '-': kind = Tok::minus; break;
      case '*': kind = Tok::star; break;
      case '%': kind = Tok::percent; break;
      case '/':
        kind = peek(1) == '/' ? Tok::slashslash : Tok::slash;
        len = kind == Tok::slashslash ? 2 : 1;
        break;
      case '=':
        kind = peek(1) == '=' ? Tok::eq : Tok::assign;
        len = kind == Tok::eq ? 2 : 1;
        break;
      case '!':
        if (peek(1) != '=') throw ParseError("unexpected character '!' (use 'not')", start);
        kind = Tok::ne;
        len = 2;
        break;
      case '<':
        kind = peek(1) == '=' ? Tok::le : Tok::lt;
        len = kind == Tok::le ? 2 : 1;
        break;
      case '>':
        kind = peek(1) == '=' ? Tok::ge : Tok::gt;
        len = kind == Tok::ge ? 2 : 1;
        break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", start);
    }
    advance(len);
    out.push_back({kind, std::string(src.substr(i - len, len)), start});
  }
  out.push_back({Tok::end, "", pos});
  return out;
}

}  // namespace dataforge::mathgen
