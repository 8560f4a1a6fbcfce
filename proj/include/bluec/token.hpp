#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bluec/source.hpp"

namespace bluec {

enum class TokenKind {
  Ident,      // identifiers, including $-prefixed system task names
  Keyword,
  IntLit,     // decimal or 'h hexadecimal
  StringLit,
  Op,         // operators: + - * < <= > >= == != ! && || ? <- = . # :
  Punct,      // ( ) ; ,
  AttrOpen,   // (*
  AttrClose,  // *)
  Eof,
};

struct Token {
  TokenKind kind = TokenKind::Eof;
  std::string text;        // exact spelling ("<=", "endmodule", "'h10", ...)
  std::string strValue;    // decoded value for StringLit
  uint64_t intValue = 0;   // decoded value for IntLit
  SourceLoc loc;

  bool is(TokenKind k) const { return kind == k; }
  bool is(TokenKind k, const char* t) const { return kind == k && text == t; }
  bool isKw(const char* t) const { return kind == TokenKind::Keyword && text == t; }
  bool isOp(const char* t) const { return kind == TokenKind::Op && text == t; }
  bool isPunct(const char* t) const { return kind == TokenKind::Punct && text == t; }
};

// Tokenizes one source file. Throws CompileError on malformed input
// (illegal characters, unterminated strings or comments, bad literals).
std::vector<Token> tokenize(const std::string& fileName, const std::string& text);

bool isKeyword(const std::string& word);

}  // namespace bluec
