#include <sstream>

#include "microdeduct/frontend.hpp"

namespace microdeduct {

namespace {

const char *prov_suffix(Provenance p) {
  switch (p) {
  case Provenance::User:
    return "";
  case Provenance::Functional:
    return " // Functional";
  case Provenance::Auxiliary:
    return " // Auxiliary";
  }
  return "";
}

std::string render_call(const CallExpr &c) {
  std::string s = c.callee + "(";
  for (size_t i = 0; i < c.args.size(); ++i) {
    if (i)
      s += ", ";
    const CallArg &a = c.args[i];
    switch (a.kind) {
    case CallArg::Kind::Value:
      s += render_term(a.value);
      break;
    case CallArg::Kind::AddrOf:
      s += "&" + a.target.name;
      break;
    case CallArg::Kind::RefParam:
      s += a.target.name;
      break;
    }
  }
  s += ")";
  return s;
}

void print_stmts(std::ostringstream &out, const std::vector<Stmt> &body, int depth) {
  std::string ind(2 * depth, ' ');
  for (auto &s : body) {
    switch (s.kind) {
    case StmtKind::Decl:
      out << ind << "int " << s.target.name << " = "
          << (s.call ? render_call(*s.call) : render_term(s.expr)) << ";\n";
      break;
    case StmtKind::Assign:
      out << ind << s.target.name << " = " << (s.call ? render_call(*s.call) : render_term(s.expr))
          << ";\n";
      break;
    case StmtKind::DerefAssign:
      out << ind << "*" << s.target.name << " = " << render_term(s.expr) << ";\n";
      break;
    case StmtKind::If:
      out << ind << "if (" << render_formula(s.cond) << ") {\n";
      print_stmts(out, s.then_body, depth + 1);
      if (!s.else_body.empty()) {
        out << ind << "} else {\n";
        print_stmts(out, s.else_body, depth + 1);
      }
      out << ind << "}\n";
      break;
    case StmtKind::While:
      out << ind << "/*@";
      for (auto &inv : s.invariants)
        out << " loop invariant " << render_formula(inv) << ";";
      out << " */\n";
      out << ind << "while (" << render_formula(s.cond) << ") {\n";
      print_stmts(out, s.body, depth + 1);
      out << ind << "}\n";
      break;
    case StmtKind::Return:
      if (s.ret)
        out << ind << "return " << render_term(*s.ret) << ";\n";
      else
        out << ind << "return;\n";
      break;
    case StmtKind::CallStmt:
      out << ind << render_call(*s.call) << ";\n";
      break;
    }
  }
}

void print_contract(std::ostringstream &out, const Contract &c) {
  std::vector<std::string> lines;
  for (auto &cl : c.requires_clauses)
    lines.push_back("requires " + render_formula(cl.formula) + ";" + prov_suffix(cl.provenance));
  for (auto &cl : c.ensures_clauses)
    lines.push_back("ensures " + render_formula(cl.formula) + ";" + prov_suffix(cl.provenance));
  if (c.assigns) {
    std::string a = "assigns ";
    if (c.assigns->locations.empty()) {
      a += "\\nothing";
    } else {
      for (size_t i = 0; i < c.assigns->locations.size(); ++i) {
        if (i)
          a += ", ";
        a += render_location(c.assigns->locations[i]);
      }
    }
    lines.push_back(a + ";" + prov_suffix(c.assigns->provenance));
  }
  if (lines.empty())
    lines.push_back("requires \\true;"); // a contract never prints empty
  out << "/*@ " << lines[0] << "\n";
  for (size_t i = 1; i < lines.size(); ++i)
    out << "    " << lines[i] << "\n";
  out << "*/\n";
}

} // namespace

std::string emit_source(const ModuleAst &m) {
  std::ostringstream out;
  for (auto &g : m.globals)
    out << "int " << g.name << ";\n";

  for (auto &fn : m.functions) {
    out << "\n";
    if (fn.contract)
      print_contract(out, *fn.contract);
    out << (fn.returns_int ? "int " : "void ") << fn.name << "(";
    for (size_t i = 0; i < fn.params.size(); ++i) {
      if (i)
        out << ", ";
      out << "int " << (fn.params[i].kind == ParamKind::Reference ? "*" : "") << fn.params[i].name;
    }
    out << ") {\n";
    print_stmts(out, fn.body, 1);
    out << "}\n";
  }

  if (!m.notes.empty()) {
    out << "\n";
    for (auto &n : m.notes)
      out << "// note: " << n << "\n";
  }
  return out.str();
}

} // namespace microdeduct
