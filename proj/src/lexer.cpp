#include "lexer.hpp"

#include <cctype>

namespace microdeduct {

namespace {

struct Lexer {
  std::string_view src;
  size_t pos = 0;
  int line = 1;
  int col = 1;
  bool in_annot = false;
  LexResult out;

  char peek(size_t ahead = 0) const { return pos + ahead < src.size() ? src[pos + ahead] : '\0'; }

  void advance() {
    if (pos >= src.size())
      return;
    if (src[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }

  SourceSpan here() const { return {line, col, line, col}; }

  void push(Tok k, SourceSpan sp, std::string text = "", int64_t value = 0) {
    out.tokens.push_back({k, std::move(text), value, sp});
  }

  void error(DiagCategory cat, SourceSpan sp, std::string msg) {
    out.diagnostics.push_back({Severity::Error, cat, sp, std::move(msg)});
  }

  bool starts_with(std::string_view s) const { return src.substr(pos, s.size()) == s; }

  void skip_block_comment(SourceSpan sp) {
    // positioned after "/*"
    while (pos < src.size()) {
      if (starts_with("*/")) {
        advance();
        advance();
        return;
      }
      advance();
    }
    error(DiagCategory::Parse, sp, "unterminated comment");
  }

  void line_comment() {
    SourceSpan sp = here();
    advance(); // /
    advance(); // /
    size_t start = pos;
    while (pos < src.size() && src[pos] != '\n')
      advance();
    std::string_view body = src.substr(start, pos - start);
    // Trim surrounding spaces.
    size_t b = body.find_first_not_of(" \t");
    size_t e = body.find_last_not_of(" \t");
    std::string text = b == std::string_view::npos ? "" : std::string(body.substr(b, e - b + 1));
    if (in_annot) {
      std::string lower;
      for (char c : text)
        lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (lower == "functional" || lower == "auxiliary")
        push(Tok::ProvMark, sp, lower);
      // other comments inside annotations are dropped
    } else if (text.rfind("note:", 0) == 0) {
      std::string note = text.substr(5);
      size_t nb = note.find_first_not_of(" \t");
      push(Tok::NoteComment, sp, nb == std::string::npos ? "" : note.substr(nb));
    }
  }

  void ident_or_keyword() {
    SourceSpan sp = here();
    size_t start = pos;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')
      advance();
    std::string word(src.substr(start, pos - start));
    sp.end_line = line;
    sp.end_col = col;
    if (word == "int")
      push(Tok::KwInt, sp);
    else if (word == "void")
      push(Tok::KwVoid, sp);
    else if (word == "if")
      push(Tok::KwIf, sp);
    else if (word == "else")
      push(Tok::KwElse, sp);
    else if (word == "while")
      push(Tok::KwWhile, sp);
    else if (word == "return")
      push(Tok::KwReturn, sp);
    else
      push(Tok::Ident, sp, word);
  }

  void number() {
    SourceSpan sp = here();
    size_t start = pos;
    while (std::isdigit(static_cast<unsigned char>(peek())))
      advance();
    if (peek() == '.') {
      while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.')
        advance();
      error(DiagCategory::Unsupported, sp, "floating-point literals are not supported");
      return;
    }
    std::string digits(src.substr(start, pos - start));
    int64_t v = 0;
    bool overflow = false;
    for (char c : digits) {
      if (__builtin_mul_overflow(v, 10, &v) || __builtin_add_overflow(v, c - '0', &v)) {
        overflow = true;
        break;
      }
    }
    if (overflow) {
      error(DiagCategory::Parse, sp, "integer literal too large");
      return;
    }
    sp.end_line = line;
    sp.end_col = col;
    push(Tok::IntLit, sp, digits, v);
  }

  void backslash_word() {
    SourceSpan sp = here();
    advance(); // backslash
    size_t start = pos;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')
      advance();
    std::string word(src.substr(start, pos - start));
    if (word == "old" || word == "result" || word == "valid" || word == "nothing" || word == "true" ||
        word == "false") {
      push(Tok::BsWord, sp, word);
    } else {
      error(DiagCategory::Parse, sp, "unknown annotation construct '\\" + word + "'");
    }
  }

  void run() {
    while (pos < src.size()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
        continue;
      }
      SourceSpan sp = here();
      if (!in_annot && starts_with("/*@")) {
        advance();
        advance();
        advance();
        in_annot = true;
        push(Tok::AnnotStart, sp);
        continue;
      }
      if (starts_with("/*")) {
        advance();
        advance();
        skip_block_comment(sp);
        continue;
      }
      if (in_annot && starts_with("*/")) {
        advance();
        advance();
        in_annot = false;
        push(Tok::AnnotEnd, sp);
        continue;
      }
      if (starts_with("//")) {
        line_comment();
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        ident_or_keyword();
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        number();
        continue;
      }
      if (c == '\\') {
        if (!in_annot) {
          error(DiagCategory::Parse, sp, "'\\' outside annotation");
          advance();
          continue;
        }
        backslash_word();
        continue;
      }
      if (starts_with("==>")) {
        advance();
        advance();
        advance();
        push(Tok::Implies, sp);
        continue;
      }
      if (starts_with("==")) {
        advance();
        advance();
        push(Tok::EqEq, sp);
        continue;
      }
      if (starts_with("!=")) {
        advance();
        advance();
        push(Tok::NotEq, sp);
        continue;
      }
      if (starts_with("<=")) {
        advance();
        advance();
        push(Tok::Le, sp);
        continue;
      }
      if (starts_with(">=")) {
        advance();
        advance();
        push(Tok::Ge, sp);
        continue;
      }
      if (starts_with("&&")) {
        advance();
        advance();
        push(Tok::AndAnd, sp);
        continue;
      }
      if (starts_with("||")) {
        advance();
        advance();
        push(Tok::OrOr, sp);
        continue;
      }
      switch (c) {
      case '(':
        advance();
        push(Tok::LParen, sp);
        break;
      case ')':
        advance();
        push(Tok::RParen, sp);
        break;
      case '{':
        advance();
        push(Tok::LBrace, sp);
        break;
      case '}':
        advance();
        push(Tok::RBrace, sp);
        break;
      case ';':
        advance();
        push(Tok::Semi, sp);
        break;
      case ',':
        advance();
        push(Tok::Comma, sp);
        break;
      case '=':
        advance();
        push(Tok::Assign, sp);
        break;
      case '+':
        advance();
        push(Tok::Plus, sp);
        break;
      case '-':
        advance();
        push(Tok::Minus, sp);
        break;
      case '*':
        advance();
        push(Tok::Star, sp);
        break;
      case '&':
        advance();
        push(Tok::Amp, sp);
        break;
      case '!':
        advance();
        push(Tok::Bang, sp);
        break;
      case '<':
        advance();
        push(Tok::Lt, sp);
        break;
      case '>':
        advance();
        push(Tok::Gt, sp);
        break;
      default:
        error(DiagCategory::Parse, sp, std::string("unexpected character '") + c + "'");
        advance();
        break;
      }
    }
    if (in_annot)
      error(DiagCategory::Parse, here(), "unterminated annotation block");
    push(Tok::Eof, here());
  }
};

} // namespace

LexResult lex(std::string_view src) {
  Lexer lx{src};
  lx.run();
  return std::move(lx.out);
}

} // namespace microdeduct
