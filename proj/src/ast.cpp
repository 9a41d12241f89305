#include "microdeduct/ast.hpp"

namespace microdeduct {

bool Contract::has_user_clause() const {
  for (auto &c : requires_clauses)
    if (c.provenance == Provenance::User)
      return true;
  for (auto &c : ensures_clauses)
    if (c.provenance == Provenance::User)
      return true;
  return assigns && assigns->provenance == Provenance::User;
}

FormulaRef Contract::requires_conj() const {
  std::vector<FormulaRef> fs;
  for (auto &c : requires_clauses)
    fs.push_back(c.formula);
  return mk_and(fs);
}

FormulaRef Contract::ensures_conj() const {
  std::vector<FormulaRef> fs;
  for (auto &c : ensures_clauses)
    fs.push_back(c.formula);
  return mk_and(fs);
}

const Param *FunctionDef::find_param(const std::string &n) const {
  for (auto &p : params)
    if (p.name == n)
      return &p;
  return nullptr;
}

Location FunctionDef::param_loc(const std::string &n) const { return {LocKind::Param, n, name}; }
Location FunctionDef::deref_loc(const std::string &n) const { return {LocKind::DerefParam, n, name}; }
Location FunctionDef::local_loc(const std::string &n) const { return {LocKind::Local, n, name}; }

const FunctionDef *ModuleAst::find_function(const std::string &n) const {
  for (auto &f : functions)
    if (f.name == n)
      return &f;
  return nullptr;
}

FunctionDef *ModuleAst::find_function(const std::string &n) {
  for (auto &f : functions)
    if (f.name == n)
      return &f;
  return nullptr;
}

bool ModuleAst::is_global(const std::string &n) const {
  for (auto &g : globals)
    if (g.name == n)
      return true;
  return false;
}

Location ModuleAst::global_loc(const std::string &n) const { return {LocKind::Global, n, ""}; }

// ---------------------------------------------------------------------------
// Structural equality (spans and point ids ignored; terms and formulas are
// interned, so pointer comparison is structural).
// ---------------------------------------------------------------------------

namespace {

bool eq_call(const std::optional<CallExpr> &a, const std::optional<CallExpr> &b) {
  if (a.has_value() != b.has_value())
    return false;
  if (!a)
    return true;
  if (a->callee != b->callee || a->args.size() != b->args.size())
    return false;
  for (size_t i = 0; i < a->args.size(); ++i) {
    const CallArg &x = a->args[i], &y = b->args[i];
    if (x.kind != y.kind || x.value != y.value || x.target != y.target)
      return false;
  }
  return true;
}

bool eq_stmts(const std::vector<Stmt> &a, const std::vector<Stmt> &b) {
  if (a.size() != b.size())
    return false;
  for (size_t i = 0; i < a.size(); ++i) {
    const Stmt &x = a[i], &y = b[i];
    if (x.kind != y.kind || x.target != y.target || x.expr != y.expr || x.cond != y.cond ||
        x.ret != y.ret || x.invariants != y.invariants)
      return false;
    if (!eq_call(x.call, y.call))
      return false;
    if (!eq_stmts(x.then_body, y.then_body) || !eq_stmts(x.else_body, y.else_body) ||
        !eq_stmts(x.body, y.body))
      return false;
  }
  return true;
}

bool eq_contract(const std::optional<Contract> &a, const std::optional<Contract> &b) {
  if (a.has_value() != b.has_value())
    return false;
  if (!a)
    return true;
  auto eq_clauses = [](const std::vector<Clause> &x, const std::vector<Clause> &y) {
    if (x.size() != y.size())
      return false;
    for (size_t i = 0; i < x.size(); ++i)
      if (x[i].formula != y[i].formula || x[i].provenance != y[i].provenance)
        return false;
    return true;
  };
  if (!eq_clauses(a->requires_clauses, b->requires_clauses) ||
      !eq_clauses(a->ensures_clauses, b->ensures_clauses))
    return false;
  if (a->assigns.has_value() != b->assigns.has_value())
    return false;
  if (a->assigns) {
    if (a->assigns->locations != b->assigns->locations ||
        a->assigns->provenance != b->assigns->provenance)
      return false;
  }
  return true;
}

} // namespace

bool structurally_equal(const ModuleAst &a, const ModuleAst &b) {
  if (a.entry != b.entry || a.notes != b.notes)
    return false;
  if (a.globals.size() != b.globals.size())
    return false;
  for (size_t i = 0; i < a.globals.size(); ++i)
    if (a.globals[i].name != b.globals[i].name)
      return false;
  if (a.functions.size() != b.functions.size())
    return false;
  for (size_t i = 0; i < a.functions.size(); ++i) {
    const FunctionDef &x = a.functions[i], &y = b.functions[i];
    if (x.name != y.name || x.returns_int != y.returns_int || x.locals != y.locals)
      return false;
    if (x.params.size() != y.params.size())
      return false;
    for (size_t j = 0; j < x.params.size(); ++j)
      if (x.params[j].name != y.params[j].name || x.params[j].kind != y.params[j].kind)
        return false;
    if (!eq_contract(x.contract, y.contract) || !eq_stmts(x.body, y.body))
      return false;
  }
  return true;
}

} // namespace microdeduct
