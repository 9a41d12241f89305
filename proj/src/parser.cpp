#include <functional>
#include <map>
#include <set>

#include "lexer.hpp"
#include "microdeduct/frontend.hpp"

namespace microdeduct {

namespace {

// Vocabulary restrictions for the expression parser.
struct ExprCtx {
  bool annotation = false; // ==>, \true/\false, chained comparisons
  bool allow_old = false;  // ensures only
  bool allow_result = false;
  bool allow_valid = false; // requires only
};

// Expressions are typed during parsing: integers, booleans, or a bare
// reference parameter (legal only as a call argument).
struct PExpr {
  enum class Type { Int, Bool, Ptr } type = Type::Int;
  TermRef term = nullptr;
  FormulaRef formula = nullptr;
  std::string ptr_name;
  SourceSpan span;
};

struct Parser {
  std::vector<Token> toks;
  size_t pos = 0;
  std::vector<Diagnostic> diags;
  ModuleAst mod;
  int next_point = 0;

  // scope of the function being parsed
  FunctionDef *cur = nullptr;
  std::set<std::string> cur_locals;

  struct Bail {}; // unwinds to parse_module on fatal errors

  const Token &peek(size_t ahead = 0) const {
    size_t i = pos + ahead;
    return i < toks.size() ? toks[i] : toks.back();
  }

  const Token &advance() {
    const Token &t = peek();
    if (pos + 1 < toks.size())
      ++pos;
    return t;
  }

  bool at(Tok k) const { return peek().kind == k; }

  bool accept(Tok k) {
    if (at(k)) {
      advance();
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(DiagCategory cat, SourceSpan sp, std::string msg) {
    diags.push_back({Severity::Error, cat, sp, std::move(msg)});
    throw Bail{};
  }

  Token expect(Tok k, const char *what) {
    if (!at(k))
      fail(DiagCategory::Parse, peek().span, std::string("expected ") + what);
    return advance();
  }

  // --- name lookup ------------------------------------------------------

  enum class NameKind { Unknown, Global, ValueParam, RefParam, Local };

  NameKind lookup(const std::string &n) const {
    if (cur) {
      for (auto &p : cur->params)
        if (p.name == n)
          return p.kind == ParamKind::Reference ? NameKind::RefParam : NameKind::ValueParam;
      if (cur_locals.count(n))
        return NameKind::Local;
    }
    if (mod.is_global(n))
      return NameKind::Global;
    return NameKind::Unknown;
  }

  Location loc_of(const std::string &n, NameKind k) const {
    switch (k) {
    case NameKind::Global:
      return {LocKind::Global, n, ""};
    case NameKind::ValueParam:
      return {LocKind::Param, n, cur->name};
    case NameKind::Local:
      return {LocKind::Local, n, cur->name};
    default:
      return {LocKind::Param, n, cur->name};
    }
  }

  // --- expressions ------------------------------------------------------

  PExpr parse_primary(const ExprCtx &cx) {
    SourceSpan sp = peek().span;
    if (at(Tok::IntLit)) {
      int64_t v = advance().value;
      return {PExpr::Type::Int, mk_int(v), nullptr, "", sp};
    }
    if (at(Tok::BsWord)) {
      std::string w = peek().text;
      if (w == "true" || w == "false") {
        if (!cx.annotation)
          fail(DiagCategory::Parse, sp, "'\\" + w + "' only allowed in annotations");
        advance();
        return {PExpr::Type::Bool, nullptr, mk_bool(w == "true"), "", sp};
      }
      if (w == "result") {
        advance();
        if (!cx.allow_result)
          fail(DiagCategory::Resolution, sp, "\\result not allowed here");
        return {PExpr::Type::Int, mk_result(), nullptr, "", sp};
      }
      if (w == "old") {
        advance();
        if (!cx.allow_old)
          fail(DiagCategory::Resolution, sp, "\\old not allowed here");
        expect(Tok::LParen, "'(' after \\old");
        Location l = parse_location_ref("\\old argument");
        expect(Tok::RParen, "')'");
        return {PExpr::Type::Int, mk_old(l), nullptr, "", sp};
      }
      if (w == "valid") {
        advance();
        if (!cx.allow_valid)
          fail(DiagCategory::Resolution, sp, "\\valid only allowed in requires clauses");
        expect(Tok::LParen, "'(' after \\valid");
        Token id = expect(Tok::Ident, "reference parameter name");
        if (lookup(id.text) != NameKind::RefParam)
          fail(DiagCategory::Resolution, id.span, "\\valid argument must be a reference parameter");
        expect(Tok::RParen, "')'");
        return {PExpr::Type::Bool, nullptr, mk_valid({LocKind::Param, id.text, cur->name}), "", sp};
      }
      fail(DiagCategory::Parse, sp, "'\\" + w + "' not allowed in this position");
    }
    if (at(Tok::Star)) {
      advance();
      Token id = expect(Tok::Ident, "identifier after '*'");
      NameKind k = lookup(id.text);
      if (k == NameKind::Unknown)
        fail(DiagCategory::Resolution, id.span, "unknown name '" + id.text + "'");
      if (k != NameKind::RefParam)
        fail(DiagCategory::Resolution, id.span, "'" + id.text + "' is not a reference parameter");
      return {PExpr::Type::Int, mk_loc(cur->deref_loc(id.text)), nullptr, "", sp};
    }
    if (at(Tok::Amp))
      fail(DiagCategory::Unsupported, sp, "'&' may only appear as a call argument");
    if (at(Tok::Ident)) {
      Token id = advance();
      if (at(Tok::LParen))
        fail(DiagCategory::Parse, id.span, "calls cannot appear inside expressions");
      NameKind k = lookup(id.text);
      if (k == NameKind::Unknown)
        fail(DiagCategory::Resolution, id.span, "unknown name '" + id.text + "'");
      if (k == NameKind::RefParam)
        return {PExpr::Type::Ptr, nullptr, nullptr, id.text, sp};
      return {PExpr::Type::Int, mk_loc(loc_of(id.text, k)), nullptr, "", sp};
    }
    if (at(Tok::LParen)) {
      advance();
      PExpr e = parse_implies(cx);
      expect(Tok::RParen, "')'");
      return e;
    }
    fail(DiagCategory::Parse, sp, "expected expression");
  }

  TermRef want_int(const PExpr &e, const char *what) {
    if (e.type == PExpr::Type::Ptr)
      fail(DiagCategory::Unsupported, e.span,
           "pointer '" + e.ptr_name + "' used as a value (pointer arithmetic is not supported)");
    if (e.type != PExpr::Type::Int)
      fail(DiagCategory::Resolution, e.span, std::string("expected integer expression in ") + what);
    return e.term;
  }

  FormulaRef want_bool(const PExpr &e, const char *what) {
    if (e.type != PExpr::Type::Bool)
      fail(DiagCategory::Resolution, e.span, std::string("expected condition in ") + what);
    return e.formula;
  }

  PExpr parse_unary(const ExprCtx &cx) {
    SourceSpan sp = peek().span;
    if (accept(Tok::Minus)) {
      PExpr e = parse_unary(cx);
      return {PExpr::Type::Int, mk_neg(want_int(e, "negation")), nullptr, "", sp};
    }
    if (accept(Tok::Bang)) {
      PExpr e = parse_unary(cx);
      return {PExpr::Type::Bool, nullptr, mk_not(want_bool(e, "'!'")), "", sp};
    }
    return parse_primary(cx);
  }

  PExpr parse_mul(const ExprCtx &cx) {
    PExpr e = parse_unary(cx);
    while (at(Tok::Star)) {
      SourceSpan sp = advance().span;
      PExpr r = parse_unary(cx);
      e = {PExpr::Type::Int, mk_mul(want_int(e, "'*'"), want_int(r, "'*'")), nullptr, "", sp};
    }
    return e;
  }

  PExpr parse_add(const ExprCtx &cx) {
    PExpr e = parse_mul(cx);
    while (at(Tok::Plus) || at(Tok::Minus)) {
      bool add = advance().kind == Tok::Plus;
      PExpr r = parse_mul(cx);
      TermRef t = add ? mk_add(want_int(e, "'+'"), want_int(r, "'+'"))
                      : mk_sub(want_int(e, "'-'"), want_int(r, "'-'"));
      e = {PExpr::Type::Int, t, nullptr, "", e.span};
    }
    return e;
  }

  static std::optional<CmpOp> cmp_of(Tok k) {
    switch (k) {
    case Tok::EqEq:
      return CmpOp::Eq;
    case Tok::NotEq:
      return CmpOp::Ne;
    case Tok::Lt:
      return CmpOp::Lt;
    case Tok::Le:
      return CmpOp::Le;
    case Tok::Gt:
      return CmpOp::Gt;
    case Tok::Ge:
      return CmpOp::Ge;
    default:
      return std::nullopt;
    }
  }

  PExpr parse_cmp(const ExprCtx &cx) {
    PExpr e = parse_add(cx);
    if (!cmp_of(peek().kind))
      return e;
    // Chained comparisons (a <= b <= c) desugar to a conjunction; only
    // annotations may chain.
    std::vector<TermRef> operands;
    std::vector<CmpOp> ops;
    operands.push_back(want_int(e, "comparison"));
    SourceSpan sp = e.span;
    while (auto op = cmp_of(peek().kind)) {
      advance();
      PExpr r = parse_add(cx);
      operands.push_back(want_int(r, "comparison"));
      ops.push_back(*op);
    }
    if (ops.size() > 1 && !cx.annotation)
      fail(DiagCategory::Parse, sp, "chained comparisons are only allowed in annotations");
    FormulaRef f = mk_cmp(ops[0], operands[0], operands[1]);
    for (size_t i = 1; i < ops.size(); ++i)
      f = mk_and(f, mk_cmp(ops[i], operands[i], operands[i + 1]));
    return {PExpr::Type::Bool, nullptr, f, "", sp};
  }

  PExpr parse_and(const ExprCtx &cx) {
    PExpr e = parse_cmp(cx);
    while (at(Tok::AndAnd)) {
      SourceSpan sp = advance().span;
      PExpr r = parse_cmp(cx);
      e = {PExpr::Type::Bool, nullptr, mk_and(want_bool(e, "'&&'"), want_bool(r, "'&&'")), "", sp};
    }
    return e;
  }

  PExpr parse_or(const ExprCtx &cx) {
    PExpr e = parse_and(cx);
    while (at(Tok::OrOr)) {
      SourceSpan sp = advance().span;
      PExpr r = parse_and(cx);
      e = {PExpr::Type::Bool, nullptr, mk_or(want_bool(e, "'||'"), want_bool(r, "'||'")), "", sp};
    }
    return e;
  }

  PExpr parse_implies(const ExprCtx &cx) {
    PExpr e = parse_or(cx);
    if (at(Tok::Implies)) {
      SourceSpan sp = peek().span;
      if (!cx.annotation)
        fail(DiagCategory::Parse, sp, "'==>' is only allowed in annotations");
      advance();
      PExpr r = parse_implies(cx); // right-associative
      e = {PExpr::Type::Bool, nullptr, mk_implies(want_bool(e, "'==>'"), want_bool(r, "'==>'")), "", sp};
    }
    return e;
  }

  TermRef parse_int_expr(const ExprCtx &cx, const char *what) {
    PExpr e = parse_implies(cx);
    return want_int(e, what);
  }

  FormulaRef parse_condition(const ExprCtx &cx, const char *what) {
    PExpr e = parse_implies(cx);
    return want_bool(e, what);
  }

  // Location reference inside \old(...): a variable or *p.
  Location parse_location_ref(const char *what) {
    if (accept(Tok::Star)) {
      Token id = expect(Tok::Ident, "identifier after '*'");
      if (lookup(id.text) != NameKind::RefParam)
        fail(DiagCategory::Resolution, id.span, "'" + id.text + "' is not a reference parameter");
      return cur->deref_loc(id.text);
    }
    Token id = expect(Tok::Ident, what);
    NameKind k = lookup(id.text);
    if (k == NameKind::Unknown)
      fail(DiagCategory::Resolution, id.span, "unknown name '" + id.text + "'");
    if (k == NameKind::RefParam)
      fail(DiagCategory::Resolution, id.span, "reference parameter '" + id.text + "' has no integer value");
    return loc_of(id.text, k);
  }

  // --- contracts --------------------------------------------------------

  Provenance read_provenance() {
    if (at(Tok::ProvMark)) {
      std::string p = advance().text;
      return p == "functional" ? Provenance::Functional : Provenance::Auxiliary;
    }
    return Provenance::User;
  }

  Contract parse_contract_block() {
    Contract c;
    while (!at(Tok::AnnotEnd)) {
      Token kw = expect(Tok::Ident, "contract clause");
      SourceSpan sp = kw.span;
      if (kw.text == "requires") {
        ExprCtx cx;
        cx.annotation = true;
        cx.allow_valid = true;
        FormulaRef f = parse_condition(cx, "requires clause");
        expect(Tok::Semi, "';'");
        c.requires_clauses.push_back({f, read_provenance(), sp});
      } else if (kw.text == "ensures") {
        ExprCtx cx;
        cx.annotation = true;
        cx.allow_old = true;
        cx.allow_result = true;
        FormulaRef f = parse_condition(cx, "ensures clause");
        expect(Tok::Semi, "';'");
        c.ensures_clauses.push_back({f, read_provenance(), sp});
      } else if (kw.text == "assigns") {
        if (c.assigns)
          fail(DiagCategory::Parse, sp, "duplicate assigns clause");
        AssignsClause a;
        a.span = sp;
        if (at(Tok::BsWord) && peek().text == "nothing") {
          advance();
        } else {
          a.locations.push_back(parse_assigns_target());
          while (accept(Tok::Comma))
            a.locations.push_back(parse_assigns_target());
        }
        expect(Tok::Semi, "';'");
        a.provenance = read_provenance();
        c.assigns = a;
      } else if (kw.text == "loop") {
        fail(DiagCategory::Parse, sp, "loop invariant annotation must precede a while statement");
      } else {
        fail(DiagCategory::Parse, sp, "unknown contract clause '" + kw.text + "'");
      }
    }
    expect(Tok::AnnotEnd, "'*/'");
    return c;
  }

  Location parse_assigns_target() {
    if (accept(Tok::Star)) {
      Token id = expect(Tok::Ident, "identifier after '*'");
      if (lookup(id.text) != NameKind::RefParam)
        fail(DiagCategory::Resolution, id.span,
             "assigns target '*" + id.text + "' is not a reference parameter");
      return cur->deref_loc(id.text);
    }
    Token id = expect(Tok::Ident, "assigns target");
    NameKind k = lookup(id.text);
    if (k != NameKind::Global)
      fail(DiagCategory::Resolution, id.span,
           "assigns target '" + id.text + "' must be a global or a dereferenced reference parameter");
    return {LocKind::Global, id.text, ""};
  }

  std::vector<FormulaRef> parse_loop_annotation() {
    std::vector<FormulaRef> invs;
    expect(Tok::AnnotStart, "'/*@'");
    while (!at(Tok::AnnotEnd)) {
      Token kw = expect(Tok::Ident, "'loop'");
      if (kw.text != "loop")
        fail(DiagCategory::Parse, kw.span, "expected 'loop invariant' before while");
      Token inv = expect(Tok::Ident, "'invariant'");
      if (inv.text != "invariant")
        fail(DiagCategory::Parse, inv.span, "expected 'invariant'");
      ExprCtx cx;
      cx.annotation = true;
      invs.push_back(parse_condition(cx, "loop invariant"));
      expect(Tok::Semi, "';'");
    }
    expect(Tok::AnnotEnd, "'*/'");
    if (invs.empty())
      fail(DiagCategory::Parse, peek().span, "empty loop annotation");
    return invs;
  }

  // --- statements -------------------------------------------------------

  CallExpr parse_call(const std::string &callee, SourceSpan sp) {
    CallExpr ce;
    ce.callee = callee;
    ce.span = sp;
    expect(Tok::LParen, "'('");
    if (!at(Tok::RParen)) {
      do {
        ce.args.push_back(parse_arg());
      } while (accept(Tok::Comma));
    }
    expect(Tok::RParen, "')'");
    return ce;
  }

  CallArg parse_arg() {
    SourceSpan sp = peek().span;
    if (accept(Tok::Amp)) {
      Token id = expect(Tok::Ident, "variable after '&'");
      NameKind k = lookup(id.text);
      if (k == NameKind::Unknown)
        fail(DiagCategory::Resolution, id.span, "unknown name '" + id.text + "'");
      if (k == NameKind::RefParam)
        fail(DiagCategory::Unsupported, id.span, "'&' of a pointer is a nested pointer");
      if (k == NameKind::ValueParam)
        fail(DiagCategory::Resolution, id.span, "cannot take the address of a value parameter");
      CallArg a;
      a.kind = CallArg::Kind::AddrOf;
      a.target = loc_of(id.text, k);
      a.span = sp;
      return a;
    }
    ExprCtx cx;
    PExpr e = parse_implies(cx);
    if (e.type == PExpr::Type::Ptr) {
      CallArg a;
      a.kind = CallArg::Kind::RefParam;
      a.target = {LocKind::Param, e.ptr_name, cur->name};
      a.span = sp;
      return a;
    }
    CallArg a;
    a.kind = CallArg::Kind::Value;
    a.value = want_int(e, "call argument");
    a.span = sp;
    return a;
  }

  Stmt parse_statement() {
    SourceSpan sp = peek().span;
    Stmt s;
    s.span = sp;
    s.point = next_point++;

    if (at(Tok::Ident) && peek().text == "static")
      fail(DiagCategory::Unsupported, sp, "local static variables are not supported");
    if (at(Tok::Ident) && (peek().text == "float" || peek().text == "double"))
      fail(DiagCategory::Unsupported, sp, "floating-point arithmetic is not supported");

    if (accept(Tok::KwInt)) {
      if (at(Tok::Star))
        fail(DiagCategory::Unsupported, sp, "pointer-typed locals (stack pointers) are not supported");
      Token id = expect(Tok::Ident, "local variable name");
      if (lookup(id.text) != NameKind::Unknown)
        fail(DiagCategory::Resolution, id.span, "redefinition of '" + id.text + "'");
      expect(Tok::Assign, "'=' (locals must be initialized)");
      s.kind = StmtKind::Decl;
      Location l{LocKind::Local, id.text, cur->name};
      parse_rhs(s); // initializer parsed before the name is in scope
      cur_locals.insert(id.text);
      cur->locals.push_back(id.text);
      s.target = l;
      expect(Tok::Semi, "';'");
      return s;
    }

    if (accept(Tok::Star)) {
      Token id = expect(Tok::Ident, "identifier after '*'");
      NameKind k = lookup(id.text);
      if (k == NameKind::Unknown)
        fail(DiagCategory::Resolution, id.span, "unknown name '" + id.text + "'");
      if (k != NameKind::RefParam)
        fail(DiagCategory::Resolution, id.span, "'" + id.text + "' is not a reference parameter");
      expect(Tok::Assign, "'='");
      s.kind = StmtKind::DerefAssign;
      s.target = cur->deref_loc(id.text);
      ExprCtx cx;
      s.expr = parse_int_expr(cx, "assignment");
      expect(Tok::Semi, "';'");
      return s;
    }

    if (accept(Tok::KwIf)) {
      s.kind = StmtKind::If;
      expect(Tok::LParen, "'('");
      ExprCtx cx;
      s.cond = parse_condition(cx, "if condition");
      expect(Tok::RParen, "')'");
      s.then_body = parse_block();
      if (accept(Tok::KwElse))
        s.else_body = parse_block();
      return s;
    }

    if (at(Tok::AnnotStart)) {
      s.invariants = parse_loop_annotation();
      if (!at(Tok::KwWhile))
        fail(DiagCategory::Parse, peek().span, "loop annotation must be followed by 'while'");
    }

    if (at(Tok::KwWhile)) {
      SourceSpan wsp = advance().span;
      if (s.invariants.empty())
        fail(DiagCategory::Unsupported, wsp,
             "while loop without a loop invariant (loop invariant inference is not supported)");
      s.kind = StmtKind::While;
      expect(Tok::LParen, "'('");
      ExprCtx cx;
      s.cond = parse_condition(cx, "while condition");
      expect(Tok::RParen, "')'");
      s.body = parse_block();
      return s;
    }

    if (accept(Tok::KwReturn)) {
      s.kind = StmtKind::Return;
      if (!at(Tok::Semi)) {
        ExprCtx cx;
        s.ret = parse_int_expr(cx, "return value");
      }
      expect(Tok::Semi, "';'");
      if (cur->returns_int && !s.ret)
        fail(DiagCategory::Resolution, sp, "'" + cur->name + "' must return a value");
      if (!cur->returns_int && s.ret)
        fail(DiagCategory::Resolution, sp, "void function '" + cur->name + "' cannot return a value");
      return s;
    }

    if (at(Tok::Ident)) {
      Token id = advance();
      if (at(Tok::LParen)) {
        s.kind = StmtKind::CallStmt;
        s.call = parse_call(id.text, sp);
        expect(Tok::Semi, "';'");
        return s;
      }
      expect(Tok::Assign, "'=' or '('");
      NameKind k = lookup(id.text);
      if (k == NameKind::Unknown)
        fail(DiagCategory::Resolution, id.span, "unknown name '" + id.text + "'");
      if (k == NameKind::ValueParam)
        fail(DiagCategory::Resolution, id.span, "cannot assign to value parameter '" + id.text + "'");
      if (k == NameKind::RefParam)
        fail(DiagCategory::Resolution, id.span, "cannot reassign reference parameter '" + id.text + "'");
      s.kind = StmtKind::Assign;
      s.target = loc_of(id.text, k);
      parse_rhs(s);
      expect(Tok::Semi, "';'");
      return s;
    }

    fail(DiagCategory::Parse, sp, "expected statement");
  }

  // rhs of a declaration or assignment: expression or call
  void parse_rhs(Stmt &s) {
    if (at(Tok::Ident) && peek(1).kind == Tok::LParen) {
      Token id = advance();
      s.call = parse_call(id.text, id.span);
      return;
    }
    ExprCtx cx;
    s.expr = parse_int_expr(cx, "assignment");
  }

  std::vector<Stmt> parse_block() {
    expect(Tok::LBrace, "'{'");
    std::vector<Stmt> body;
    while (!at(Tok::RBrace))
      body.push_back(parse_statement());
    expect(Tok::RBrace, "'}'");
    return body;
  }

  // --- top level --------------------------------------------------------

  void parse_signature(bool returns_int) {
    Token name = expect(Tok::Ident, "function name");
    if (mod.find_function(name.text) || mod.is_global(name.text))
      fail(DiagCategory::Resolution, name.span, "redefinition of '" + name.text + "'");

    FunctionDef fn;
    fn.name = name.text;
    fn.returns_int = returns_int;
    fn.span = name.span;
    mod.functions.push_back(std::move(fn));
    cur = &mod.functions.back();
    cur_locals.clear();

    expect(Tok::LParen, "'('");
    if (!at(Tok::RParen)) {
      do {
        if (at(Tok::Ident) && (peek().text == "float" || peek().text == "double"))
          fail(DiagCategory::Unsupported, peek().span, "floating-point arithmetic is not supported");
        expect(Tok::KwInt, "'int'");
        ParamKind pk = ParamKind::Value;
        if (accept(Tok::Star)) {
          if (at(Tok::Star))
            fail(DiagCategory::Unsupported, peek().span, "nested pointers are not supported");
          pk = ParamKind::Reference;
        }
        Token pn = expect(Tok::Ident, "parameter name");
        for (auto &p : cur->params)
          if (p.name == pn.text)
            fail(DiagCategory::Resolution, pn.span, "duplicate parameter '" + pn.text + "'");
        if (mod.is_global(pn.text))
          fail(DiagCategory::Resolution, pn.span, "parameter '" + pn.text + "' shadows a global");
        cur->params.push_back({pn.text, pk, pn.span});
      } while (accept(Tok::Comma));
    }
    expect(Tok::RParen, "')'");
  }

  void parse_top_level() {
    while (!at(Tok::Eof)) {
      if (at(Tok::NoteComment)) {
        mod.notes.push_back(advance().text);
        continue;
      }
      if (at(Tok::Ident) && (peek().text == "float" || peek().text == "double"))
        fail(DiagCategory::Unsupported, peek().span, "floating-point arithmetic is not supported");
      if (at(Tok::Ident) && peek().text == "static")
        fail(DiagCategory::Unsupported, peek().span, "static variables are not supported");

      if (at(Tok::AnnotStart)) {
        SourceSpan sp = advance().span;
        parse_annotated_function(sp);
        continue;
      }
      if (accept(Tok::KwVoid)) {
        parse_signature(false);
        cur->body = parse_block();
        cur = nullptr;
        continue;
      }
      if (accept(Tok::KwInt)) {
        if (at(Tok::Star))
          fail(DiagCategory::Unsupported, peek().span, "pointer-typed globals are not supported");
        Token id = expect(Tok::Ident, "name");
        if (accept(Tok::Semi)) {
          if (mod.is_global(id.text) || mod.find_function(id.text))
            fail(DiagCategory::Resolution, id.span, "redefinition of '" + id.text + "'");
          if (!mod.functions.empty())
            fail(DiagCategory::Parse, id.span, "global declarations must precede all functions");
          mod.globals.push_back({id.text, id.span});
          continue;
        }
        if (at(Tok::Assign))
          fail(DiagCategory::Parse, id.span, "global initializers are not supported");
        --pos; // put the name back; it is a function definition
        parse_signature(true);
        cur->body = parse_block();
        cur = nullptr;
        continue;
      }
      fail(DiagCategory::Parse, peek().span, "expected declaration");
    }
  }

  // A /*@ ... */ block at top level annotates the next function. The clauses
  // mention parameters, so the signature is parsed first and the clause
  // tokens are revisited afterwards.
  void parse_annotated_function(SourceSpan annot_sp) {
    size_t block_start = pos;
    size_t block_end = pos;
    while (toks[block_end].kind != Tok::AnnotEnd) {
      if (toks[block_end].kind == Tok::Eof)
        fail(DiagCategory::Parse, annot_sp, "unterminated annotation block");
      ++block_end;
    }
    pos = block_end + 1;
    bool returns_int;
    if (accept(Tok::KwVoid)) {
      returns_int = false;
    } else if (accept(Tok::KwInt)) {
      returns_int = true;
    } else {
      fail(DiagCategory::Parse, peek().span, "contract must precede a function definition");
    }
    parse_signature(returns_int);
    size_t after_sig = pos;

    pos = block_start;
    cur->contract = parse_contract_block();
    check_contract_vocabulary(*cur);

    pos = after_sig;
    cur->body = parse_block();
    cur = nullptr;
  }

  void check_contract_vocabulary(FunctionDef &fn) {
    const Contract &c = *fn.contract;
    for (auto &cl : c.requires_clauses) {
      LocUse u = free_locations(cl.formula);
      if (!u.old.empty())
        fail(DiagCategory::Resolution, cl.span, "\\old is not allowed in requires clauses");
      if (u.uses_result)
        fail(DiagCategory::Resolution, cl.span, "\\result is not allowed in requires clauses");
      check_visible(u, cl.span, fn);
    }
    for (auto &cl : c.ensures_clauses) {
      LocUse u = free_locations(cl.formula);
      if (u.uses_result && !fn.returns_int)
        fail(DiagCategory::Resolution, cl.span, "\\result in ensures of void function '" + fn.name + "'");
      check_visible(u, cl.span, fn);
    }
  }

  void check_visible(const LocUse &u, SourceSpan sp, const FunctionDef &fn) {
    auto visible = [&](const Location &l) {
      if (l.kind == LocKind::Global)
        return true;
      if (l.kind == LocKind::Local)
        return false;
      return l.owner == fn.name;
    };
    for (auto &l : u.plain)
      if (!visible(l))
        fail(DiagCategory::Resolution, sp, "'" + render_location(l) + "' is not visible in this contract");
    for (auto &l : u.old)
      if (!visible(l))
        fail(DiagCategory::Resolution, sp, "'" + render_location(l) + "' is not visible in this contract");
  }
};

// ---------------------------------------------------------------------------
// Post-parse validation: call resolution, recursion, return paths, entry
// selection, reference-aliasing checks.
// ---------------------------------------------------------------------------

struct Validator {
  ModuleAst &mod;
  std::vector<Diagnostic> &diags;

  void error(DiagCategory cat, SourceSpan sp, std::string msg) {
    diags.push_back({Severity::Error, cat, sp, std::move(msg)});
  }

  void for_each_call(const std::vector<Stmt> &body, const std::function<void(const Stmt &)> &f) {
    for (auto &s : body) {
      if (s.call)
        f(s);
      for_each_call(s.then_body, f);
      for_each_call(s.else_body, f);
      for_each_call(s.body, f);
    }
  }

  void select_entry() {
    std::vector<const FunctionDef *> candidates;
    for (auto &fn : mod.functions)
      if (fn.contract && fn.contract->has_user_clause())
        candidates.push_back(&fn);
    if (candidates.empty()) {
      error(DiagCategory::Resolution, {},
            "no entry function exists: exactly one function must carry a user contract");
      return;
    }
    if (candidates.size() > 1) {
      error(DiagCategory::Resolution, candidates[1]->span,
            "multiple functions carry user contracts ('" + candidates[0]->name + "' and '" +
                candidates[1]->name + "'); exactly one entry is allowed");
      return;
    }
    mod.entry = candidates[0]->name;
  }

  void resolve_calls() {
    for (auto &fn : mod.functions) {
      for_each_call(fn.body, [&](const Stmt &s) {
        const CallExpr &c = *s.call;
        const FunctionDef *callee = mod.find_function(c.callee);
        if (!callee) {
          error(DiagCategory::Resolution, c.span, "call to unknown function '" + c.callee + "'");
          return;
        }
        if (callee->params.size() != c.args.size()) {
          error(DiagCategory::Resolution, c.span,
                "'" + c.callee + "' expects " + std::to_string(callee->params.size()) +
                    " arguments, got " + std::to_string(c.args.size()));
          return;
        }
        for (size_t i = 0; i < c.args.size(); ++i) {
          bool ref_param = callee->params[i].kind == ParamKind::Reference;
          bool ref_arg = c.args[i].kind != CallArg::Kind::Value;
          if (ref_param && !ref_arg)
            error(DiagCategory::Resolution, c.args[i].span,
                  "argument " + std::to_string(i + 1) + " of '" + c.callee + "' must be a reference");
          if (!ref_param && ref_arg)
            error(DiagCategory::Resolution, c.args[i].span,
                  "argument " + std::to_string(i + 1) + " of '" + c.callee + "' must be a value");
        }
        if ((s.kind == StmtKind::Decl || s.kind == StmtKind::Assign) && !callee->returns_int)
          error(DiagCategory::Resolution, c.span, "void function '" + c.callee + "' used as a value");
      });
    }
  }

  bool returns_on_all_paths(const std::vector<Stmt> &body) {
    for (auto &s : body) {
      if (s.kind == StmtKind::Return)
        return true;
      if (s.kind == StmtKind::If && !s.else_body.empty() && returns_on_all_paths(s.then_body) &&
          returns_on_all_paths(s.else_body))
        return true;
    }
    return false;
  }

  void check_returns() {
    for (auto &fn : mod.functions)
      if (fn.returns_int && !returns_on_all_paths(fn.body))
        error(DiagCategory::Resolution, fn.span, "'" + fn.name + "' must return a value on every path");
  }

  // Reference parameters may only ever point at distinct variables, and a
  // callee must not receive the address of a global it also accesses
  // directly. Both checks use flow-insensitive target sets.
  void check_aliasing() {
    std::map<std::pair<std::string, std::string>, std::set<Location>> targets;
    CallGraphResult cg = call_graph(mod);
    if (!cg.ok())
      return; // recursion reported separately
    std::vector<std::string> callers_first(cg.order.rbegin(), cg.order.rend());
    for (auto &fname : callers_first) {
      const FunctionDef *fn = mod.find_function(fname);
      for_each_call(fn->body, [&](const Stmt &s) {
        const CallExpr &c = *s.call;
        const FunctionDef *callee = mod.find_function(c.callee);
        if (!callee || callee->params.size() != c.args.size())
          return;
        for (size_t i = 0; i < c.args.size(); ++i) {
          if (callee->params[i].kind != ParamKind::Reference)
            continue;
          auto key = std::make_pair(c.callee, callee->params[i].name);
          if (c.args[i].kind == CallArg::Kind::AddrOf) {
            targets[key].insert(c.args[i].target);
          } else if (c.args[i].kind == CallArg::Kind::RefParam) {
            auto it = targets.find({fname, c.args[i].target.name});
            if (it != targets.end())
              targets[key].insert(it->second.begin(), it->second.end());
          }
        }
      });
    }

    std::map<std::string, std::set<std::string>> accessed;
    for (auto &fname : cg.order) { // callees first
      const FunctionDef *fn = mod.find_function(fname);
      std::set<std::string> acc;
      collect_global_access(fn->body, acc);
      for_each_call(fn->body, [&](const Stmt &s) {
        auto it = accessed.find(s.call->callee);
        if (it != accessed.end())
          acc.insert(it->second.begin(), it->second.end());
      });
      accessed[fname] = std::move(acc);
    }

    for (auto &fn : mod.functions) {
      for_each_call(fn.body, [&](const Stmt &s) {
        const CallExpr &c = *s.call;
        const FunctionDef *callee = mod.find_function(c.callee);
        if (!callee || callee->params.size() != c.args.size())
          return;
        std::vector<std::set<Location>> arg_targets;
        for (size_t i = 0; i < c.args.size(); ++i) {
          if (callee->params[i].kind != ParamKind::Reference)
            continue;
          std::set<Location> ts;
          if (c.args[i].kind == CallArg::Kind::AddrOf) {
            ts.insert(c.args[i].target);
          } else if (c.args[i].kind == CallArg::Kind::RefParam) {
            auto it = targets.find({fn.name, c.args[i].target.name});
            if (it != targets.end())
              ts = it->second;
          }
          for (auto &prev : arg_targets)
            for (auto &t : ts)
              if (prev.count(t))
                error(DiagCategory::Unsupported, c.span,
                      "aliasing reference arguments in call to '" + c.callee + "' ('" +
                          render_location(t) + "' passed twice)");
          for (auto &t : ts)
            if (t.kind == LocKind::Global && accessed[c.callee].count(t.name))
              error(DiagCategory::Unsupported, c.span,
                    "call to '" + c.callee + "' passes '&" + t.name +
                        "' while the callee also accesses global '" + t.name + "' directly");
          arg_targets.push_back(std::move(ts));
        }
      });
    }
  }

  void collect_global_access(const std::vector<Stmt> &body, std::set<std::string> &acc) {
    auto from_term = [&](TermRef t) {
      if (!t)
        return;
      for (auto &l : free_locations(t).plain)
        if (l.kind == LocKind::Global)
          acc.insert(l.name);
    };
    auto from_formula = [&](FormulaRef f) {
      if (!f)
        return;
      for (auto &l : free_locations(f).plain)
        if (l.kind == LocKind::Global)
          acc.insert(l.name);
    };
    for (auto &s : body) {
      if ((s.kind == StmtKind::Assign || s.kind == StmtKind::Decl) && s.target.kind == LocKind::Global)
        acc.insert(s.target.name);
      from_term(s.expr);
      from_formula(s.cond);
      if (s.ret)
        from_term(*s.ret);
      if (s.call)
        for (auto &a : s.call->args)
          if (a.kind == CallArg::Kind::Value)
            from_term(a.value);
      collect_global_access(s.then_body, acc);
      collect_global_access(s.else_body, acc);
      collect_global_access(s.body, acc);
    }
  }

  void run() {
    resolve_calls();
    if (has_errors(diags))
      return;
    CallGraphResult cg = call_graph(mod);
    for (auto &d : cg.diagnostics)
      diags.push_back(d);
    if (has_errors(diags))
      return;
    check_returns();
    select_entry();
    check_aliasing();
  }
};

} // namespace

ParseResult parse_module(std::string_view source) {
  ParseResult res;
  LexResult lx = lex(source);
  res.diagnostics = lx.diagnostics;
  if (has_errors(res.diagnostics))
    return res;

  Parser p;
  p.toks = std::move(lx.tokens);
  try {
    p.parse_top_level();
  } catch (Parser::Bail &) {
    res.diagnostics.insert(res.diagnostics.end(), p.diags.begin(), p.diags.end());
    return res;
  }
  res.diagnostics.insert(res.diagnostics.end(), p.diags.begin(), p.diags.end());
  if (has_errors(res.diagnostics))
    return res;

  p.mod.point_count = p.next_point;
  Validator v{p.mod, res.diagnostics};
  v.run();
  if (has_errors(res.diagnostics))
    return res;

  res.module = std::move(p.mod);
  return res;
}

} // namespace microdeduct
