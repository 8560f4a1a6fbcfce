#include <cctype>
#include <set>

#include "bluec/diag.hpp"
#include "bluec/token.hpp"

namespace bluec {

namespace {

const std::set<std::string>& keywordSet() {
  static const std::set<std::string> kws = {
      "module", "endmodule", "interface", "endinterface", "method", "endmethod",
      "rule", "endrule", "begin", "end", "action", "endaction",
      "if", "else", "while", "case", "endcase", "default", "return", "let",
      "seq", "endseq", "par", "endpar", "repeat", "break", "continue",
      "True", "False",
  };
  return kws;
}

}  // namespace

bool isKeyword(const std::string& word) { return keywordSet().count(word) > 0; }

std::vector<Token> tokenize(const std::string& fileName, const std::string& text) {
  std::vector<Token> out;
  size_t i = 0;
  int line = 1, col = 1;

  auto here = [&]() { return SourceLoc{fileName, line, col}; };
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n && i < text.size(); ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto peek = [&](size_t off = 0) -> char {
    return i + off < text.size() ? text[i + off] : '\0';
  };
  auto push = [&](TokenKind k, std::string t, SourceLoc loc) {
    Token tok;
    tok.kind = k;
    tok.text = std::move(t);
    tok.loc = std::move(loc);
    out.push_back(std::move(tok));
  };

  while (i < text.size()) {
    char c = peek();
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '/' && peek(1) == '/') {
      while (i < text.size() && peek() != '\n') advance(1);
      continue;
    }
    if (c == '/' && peek(1) == '*') {
      SourceLoc start = here();
      advance(2);
      while (i < text.size() && !(peek() == '*' && peek(1) == '/')) advance(1);
      if (i >= text.size()) throw CompileError(start, "unterminated block comment");
      advance(2);
      continue;
    }

    SourceLoc loc = here();

    if (c == '(' && peek(1) == '*') {
      push(TokenKind::AttrOpen, "(*", loc);
      advance(2);
      continue;
    }
    if (c == '*' && peek(1) == ')') {
      push(TokenKind::AttrClose, "*)", loc);
      advance(2);
      continue;
    }

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      size_t start = i;
      advance(1);
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') advance(1);
      std::string word = text.substr(start, i - start);
      if (word == "$") throw CompileError(loc, "expected system task name after '$'");
      push(isKeyword(word) ? TokenKind::Keyword : TokenKind::Ident, word, loc);
      continue;
    }

    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = i;
      advance(1);
      while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '_') advance(1);
      std::string digits = text.substr(start, i - start);
      std::string clean;
      for (char d : digits)
        if (d != '_') clean.push_back(d);
      Token tok;
      tok.kind = TokenKind::IntLit;
      tok.text = digits;
      try {
        tok.intValue = std::stoull(clean, nullptr, 10);
      } catch (const std::exception&) {
        throw CompileError(loc, "decimal literal out of range: " + digits);
      }
      tok.loc = loc;
      out.push_back(std::move(tok));
      continue;
    }

    // 'h<hexdigits> hexadecimal literal. Decimal and hex are the only
    // literal notations accepted.
    if (c == '\'') {
      if (peek(1) != 'h' && peek(1) != 'H')
        throw CompileError(loc, "unsupported literal base; only 'h hexadecimal is accepted");
      size_t start = i;
      advance(2);
      size_t digitsStart = i;
      while (std::isxdigit(static_cast<unsigned char>(peek())) || peek() == '_') advance(1);
      if (i == digitsStart) throw CompileError(loc, "expected hex digits after 'h");
      std::string digits = text.substr(digitsStart, i - digitsStart);
      std::string clean;
      for (char d : digits)
        if (d != '_') clean.push_back(d);
      Token tok;
      tok.kind = TokenKind::IntLit;
      tok.text = text.substr(start, i - start);
      try {
        tok.intValue = std::stoull(clean, nullptr, 16);
      } catch (const std::exception&) {
        throw CompileError(loc, "hex literal out of range: " + tok.text);
      }
      tok.loc = loc;
      out.push_back(std::move(tok));
      continue;
    }

    if (c == '"') {
      advance(1);
      std::string raw, value;
      bool closed = false;
      while (i < text.size()) {
        char d = peek();
        if (d == '"') {
          advance(1);
          closed = true;
          break;
        }
        if (d == '\n') break;
        if (d == '\\') {
          char e = peek(1);
          switch (e) {
            case 'n': value.push_back('\n'); break;
            case 't': value.push_back('\t'); break;
            case '\\': value.push_back('\\'); break;
            case '"': value.push_back('"'); break;
            default:
              throw CompileError(here(), std::string("unknown escape '\\") + e + "' in string literal");
          }
          raw.push_back(d);
          raw.push_back(e);
          advance(2);
          continue;
        }
        raw.push_back(d);
        value.push_back(d);
        advance(1);
      }
      if (!closed) throw CompileError(loc, "unterminated string literal");
      Token tok;
      tok.kind = TokenKind::StringLit;
      tok.text = "\"" + raw + "\"";
      tok.strValue = std::move(value);
      tok.loc = loc;
      out.push_back(std::move(tok));
      continue;
    }

    // Multi-character operators first; '<' expands three ways.
    auto two = [&](const char* op) {
      push(TokenKind::Op, op, loc);
      advance(2);
    };
    if (c == '<' && peek(1) == '-') { two("<-"); continue; }
    if (c == '<' && peek(1) == '=') { two("<="); continue; }
    if (c == '>' && peek(1) == '=') { two(">="); continue; }
    if (c == '=' && peek(1) == '=') { two("=="); continue; }
    if (c == '!' && peek(1) == '=') { two("!="); continue; }
    if (c == '&' && peek(1) == '&') { two("&&"); continue; }
    if (c == '|' && peek(1) == '|') { two("||"); continue; }

    switch (c) {
      case '+': case '-': case '*': case '<': case '>': case '!':
      case '?': case '=': case '.': case '#': case ':':
        push(TokenKind::Op, std::string(1, c), loc);
        advance(1);
        continue;
      case '(': case ')': case ';': case ',':
        push(TokenKind::Punct, std::string(1, c), loc);
        advance(1);
        continue;
      default:
        throw CompileError(loc, std::string("illegal character '") + c + "'");
    }
  }

  Token eof;
  eof.kind = TokenKind::Eof;
  eof.text = "<eof>";
  eof.loc = here();
  out.push_back(std::move(eof));
  return out;
}

}  // namespace bluec
