#pragma once

#include <optional>
#include <string>
#include <vector>

#include "microdeduct/diag.hpp"
#include "microdeduct/logic.hpp"

namespace microdeduct {

enum class ParamKind : uint8_t { Value, Reference };

struct Param {
  std::string name;
  ParamKind kind = ParamKind::Value;
  SourceSpan span;
};

enum class Provenance : uint8_t { User, Functional, Auxiliary };

struct Clause {
  FormulaRef formula = nullptr;
  Provenance provenance = Provenance::User;
  SourceSpan span;
};

struct AssignsClause {
  std::vector<Location> locations; // empty means \nothing
  Provenance provenance = Provenance::User;
  SourceSpan span;
};

struct Contract {
  std::vector<Clause> requires_clauses;
  std::vector<Clause> ensures_clauses;
  std::optional<AssignsClause> assigns;

  bool has_user_clause() const;
  FormulaRef requires_conj() const; // conjunction of all requires clauses
  FormulaRef ensures_conj() const;
};

// Call arguments: a value expression, the address of a variable, or a
// reference parameter passed through to the callee.
struct CallArg {
  enum class Kind : uint8_t { Value, AddrOf, RefParam } kind = Kind::Value;
  TermRef value = nullptr; // Value
  Location target;         // AddrOf: the named variable; RefParam: the param
  SourceSpan span;
};

struct CallExpr {
  std::string callee;
  std::vector<CallArg> args;
  SourceSpan span;
};

enum class StmtKind : uint8_t {
  Decl,        // int x = expr; | int x = f(args);
  Assign,      // x = expr; | x = f(args);
  DerefAssign, // *p = expr;
  If,
  While,
  Return,
  CallStmt // f(args);
};

struct Stmt {
  StmtKind kind = StmtKind::Decl;
  int point = 0; // unique program point id, assigned by the parser
  SourceSpan span;

  Location target;              // Decl/Assign: the declared/assigned location;
                                // DerefAssign: the *p location
  TermRef expr = nullptr;       // Decl/Assign/DerefAssign rhs (when not a call)
  std::optional<CallExpr> call; // Decl/Assign rhs call, or CallStmt

  FormulaRef cond = nullptr; // If/While
  std::vector<Stmt> then_body;
  std::vector<Stmt> else_body;
  std::vector<Stmt> body;                // While
  std::vector<FormulaRef> invariants;    // While

  std::optional<TermRef> ret; // Return
};

struct FunctionDef {
  std::string name;
  std::vector<Param> params;
  bool returns_int = false;
  std::vector<Stmt> body;
  std::vector<std::string> locals; // declaration order
  std::optional<Contract> contract;
  SourceSpan span;

  const Param *find_param(const std::string &n) const;
  Location param_loc(const std::string &n) const;
  Location deref_loc(const std::string &n) const;
  Location local_loc(const std::string &n) const;
};

struct GlobalDecl {
  std::string name;
  SourceSpan span;
};

struct ModuleAst {
  std::vector<GlobalDecl> globals;
  std::vector<FunctionDef> functions;
  std::string entry;
  // Free-form notes carried through emitted artifacts (`// note:` trailers);
  // the report surfaces them after the wp stage.
  std::vector<std::string> notes;
  int point_count = 0;

  const FunctionDef *find_function(const std::string &n) const;
  FunctionDef *find_function(const std::string &n);
  bool is_global(const std::string &n) const;
  Location global_loc(const std::string &n) const;
};

// Structural equality; spans and point ids are ignored.
bool structurally_equal(const ModuleAst &a, const ModuleAst &b);

} // namespace microdeduct
