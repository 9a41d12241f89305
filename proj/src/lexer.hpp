#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "microdeduct/diag.hpp"

namespace microdeduct {

enum class Tok : uint8_t {
  Eof,
  Ident,
  IntLit,
  KwInt,
  KwVoid,
  KwIf,
  KwElse,
  KwWhile,
  KwReturn,
  LParen,
  RParen,
  LBrace,
  RBrace,
  Semi,
  Comma,
  Assign,
  Plus,
  Minus,
  Star,
  Amp,
  Bang,
  AndAnd,
  OrOr,
  EqEq,
  NotEq,
  Lt,
  Le,
  Gt,
  Ge,
  Implies,    // ==>   (annotations only)
  AnnotStart, // /*@
  AnnotEnd,   // */ closing an annotation block
  BsWord,     // \old, \result, \valid, \nothing, \true, \false
  ProvMark,   // // Functional | // Auxiliary   inside annotation blocks
  NoteComment // // note: ...   at top level
};

struct Token {
  Tok kind = Tok::Eof;
  std::string text; // Ident/BsWord/ProvMark/NoteComment payload
  int64_t value = 0;
  SourceSpan span;
};

// Tokenizes a whole file. Annotation comments /*@ ... */ are lexed inline as
// AnnotStart ... AnnotEnd; ordinary comments are skipped except for the two
// structured forms (provenance marks, note trailers).
struct LexResult {
  std::vector<Token> tokens;
  std::vector<Diagnostic> diagnostics;
};

LexResult lex(std::string_view src);

} // namespace microdeduct
