#include "gen.hpp"

#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace microdeduct::testgen {

namespace {

TermRef leaf(Rng &rng, const std::vector<StateVar> &vars) {
  if (vars.empty() || rng.chance(30))
    return mk_int(rng.range(-8, 8));
  const StateVar &v = rng.pick(vars);
  switch (v.kind) {
  case StateVar::Kind::Cur:
    return mk_loc(v.loc);
  case StateVar::Kind::Old:
    return mk_old(v.loc);
  case StateVar::Kind::Result:
    return mk_result();
  case StateVar::Kind::Sym:
    return mk_sym(v.sym_name, v.sym_id);
  }
  return mk_int(0);
}

} // namespace

TermRef random_term(Rng &rng, const std::vector<StateVar> &vars, int depth, bool allow_product) {
  if (depth <= 0)
    return leaf(rng, vars);
  switch (rng.range(0, allow_product ? 4 : 3)) {
  case 0:
    return leaf(rng, vars);
  case 1:
    return mk_add(random_term(rng, vars, depth - 1, allow_product),
                  random_term(rng, vars, depth - 1, allow_product));
  case 2:
    return mk_sub(random_term(rng, vars, depth - 1, allow_product),
                  random_term(rng, vars, depth - 1, allow_product));
  case 3:
    return mk_neg(random_term(rng, vars, depth - 1, allow_product));
  default:
    return mk_mul(leaf(rng, vars), leaf(rng, vars)); // at most two variables
  }
}

FormulaRef random_formula(Rng &rng, const std::vector<StateVar> &vars, int depth, bool allow_product) {
  if (depth <= 0) {
    static const std::vector<CmpOp> ops = {CmpOp::Eq, CmpOp::Ne, CmpOp::Lt,
                                           CmpOp::Le, CmpOp::Gt, CmpOp::Ge};
    return mk_cmp(rng.pick(ops), random_term(rng, vars, 1, allow_product),
                  random_term(rng, vars, 1, allow_product));
  }
  switch (rng.range(0, 4)) {
  case 0:
    return random_formula(rng, vars, 0, allow_product);
  case 1:
    return mk_and(random_formula(rng, vars, depth - 1, allow_product),
                  random_formula(rng, vars, depth - 1, allow_product));
  case 2:
    return mk_or(random_formula(rng, vars, depth - 1, allow_product),
                 random_formula(rng, vars, depth - 1, allow_product));
  case 3:
    return mk_not(random_formula(rng, vars, depth - 1, allow_product));
  default:
    return mk_implies(random_formula(rng, vars, depth - 1, allow_product),
                      random_formula(rng, vars, depth - 1, allow_product));
  }
}

// ---------------------------------------------------------------------------
// Program generation. Expressions are built as strings together with a
// magnitude bound, so generated programs can never overflow at runtime for
// inputs within the entry requires.
// ---------------------------------------------------------------------------

namespace {

constexpr int64_t kMagCap = 1000000;

struct VarInfo {
  std::string name;
  int64_t mag; // |value| bound
};

struct ExprStr {
  std::string text;
  int64_t mag;
};

ExprStr gen_expr(Rng &rng, const std::vector<VarInfo> &scope, int depth, bool allow_product) {
  if (depth <= 0 || scope.empty() || rng.chance(25)) {
    if (!scope.empty() && rng.chance(70)) {
      const VarInfo &v = rng.pick(scope);
      return {v.name, v.mag};
    }
    int c = rng.range(-4, 4);
    return {std::to_string(c), std::abs(static_cast<int64_t>(c))};
  }
  int kind = rng.range(0, allow_product ? 3 : 2);
  ExprStr a = gen_expr(rng, scope, depth - 1, false);
  ExprStr b = gen_expr(rng, scope, depth - 1, false);
  switch (kind) {
  case 0:
    return {"(" + a.text + " + " + b.text + ")", a.mag + b.mag};
  case 1:
    return {"(" + a.text + " - " + b.text + ")", a.mag + b.mag};
  case 2:
    return {"(-" + a.text + ")", a.mag}; // unary under parens keeps grammar simple
  default:
    if (a.mag * b.mag > kMagCap || a.mag * b.mag < 0)
      return {"(" + a.text + " + " + b.text + ")", a.mag + b.mag};
    return {"(" + a.text + " * " + b.text + ")", a.mag * b.mag};
  }
}

std::string gen_cond(Rng &rng, const std::vector<VarInfo> &scope) {
  static const std::vector<std::string> ops = {"==", "!=", "<", "<=", ">", ">="};
  ExprStr a = gen_expr(rng, scope, 1, false);
  ExprStr b = gen_expr(rng, scope, 1, false);
  std::string c = a.text + " " + rng.pick(ops) + " " + b.text;
  if (rng.chance(25)) {
    ExprStr d = gen_expr(rng, scope, 0, false);
    ExprStr e = gen_expr(rng, scope, 0, false);
    c += std::string(rng.chance(50) ? " && " : " || ") + d.text + " " + rng.pick(ops) + " " + e.text;
  }
  return c;
}

struct HelperSig {
  std::string name;
  int value_params = 0;
  bool ref_param = false;
  bool returns_int = false;
  std::set<std::string> writes_globals; // own + transitive
  bool writes_ref = false;
  int64_t result_mag = 0;
};

} // namespace

std::string random_program(Rng &rng, const ProgramGenOptions &opts) {
  std::ostringstream out;
  std::vector<std::string> globals;
  for (int i = 0; i < opts.globals; ++i)
    globals.push_back("g" + std::to_string(i));
  for (auto &g : globals)
    out << "int " << g << ";\n";
  out << "\n";

  const int64_t gmag = opts.domain;

  int nhelpers = rng.range(opts.min_helpers, opts.max_helpers);
  std::vector<HelperSig> sigs(nhelpers);

  // generated back to front so hi may call hj for j > i
  std::vector<std::string> bodies(nhelpers);
  for (int i = nhelpers - 1; i >= 0; --i) {
    HelperSig &sig = sigs[i];
    sig.name = "h" + std::to_string(i);
    std::ostringstream b;

    bool ref_writer = opts.allow_ref_params && rng.chance(20);
    if (ref_writer) {
      // void h(int *p, int v) { *p = ...; }  -- touches no globals, so the
      // frontend aliasing rule never fires for &g arguments
      sig.ref_param = true;
      sig.value_params = rng.range(0, 1);
      sig.writes_ref = true;
      std::vector<VarInfo> scope;
      scope.push_back({"*p", 2000});
      for (int v = 0; v < sig.value_params; ++v)
        scope.push_back({"v" + std::to_string(v), 2000});
      ExprStr e = gen_expr(rng, scope, rng.range(1, 2), true);
      b << "  *p = " << e.text << ";\n";
      bodies[i] = b.str();
      continue;
    }

    sig.value_params = rng.range(0, 2);
    std::vector<VarInfo> scope;
    for (auto &g : globals)
      scope.push_back({g, 2000});
    for (int v = 0; v < sig.value_params; ++v)
      scope.push_back({"v" + std::to_string(v), 2000});

    sig.returns_int = rng.chance(70);
    if (sig.returns_int) {
      sig.result_mag = 0;
      if (rng.chance(50)) {
        // branching return
        ExprStr e1 = gen_expr(rng, scope, rng.range(0, 2), true);
        ExprStr e2 = gen_expr(rng, scope, rng.range(0, 2), true);
        b << "  if (" << gen_cond(rng, scope) << ") {\n";
        b << "    return " << e1.text << ";\n";
        b << "  } else {\n";
        b << "    return " << e2.text << ";\n";
        b << "  }\n";
        sig.result_mag = std::max(e1.mag, e2.mag);
      } else {
        ExprStr e = gen_expr(rng, scope, rng.range(1, 2), true);
        b << "  return " << e.text << ";\n";
        sig.result_mag = e.mag;
      }
    } else {
      // writer: assigns one global, possibly guarded, possibly via a call to
      // a later helper
      const std::string &g = rng.pick(globals);
      sig.writes_globals.insert(g);
      bool guarded = rng.chance(40);
      std::string ind = guarded ? "    " : "  ";
      if (guarded)
        b << "  if (" << gen_cond(rng, scope) << ") {\n";
      int callee = -1;
      for (int j = i + 1; j < nhelpers; ++j)
        if (sigs[j].returns_int && !sigs[j].ref_param && rng.chance(50)) {
          callee = j;
          break;
        }
      if (callee >= 0) {
        std::string args;
        for (int a = 0; a < sigs[callee].value_params; ++a) {
          if (a)
            args += ", ";
          args += gen_expr(rng, scope, 1, false).text;
        }
        b << ind << g << " = " << sigs[callee].name << "(" << args << ");\n";
        for (auto &w : sigs[callee].writes_globals)
          sig.writes_globals.insert(w);
      } else {
        ExprStr e = gen_expr(rng, scope, rng.range(1, 2), true);
        b << ind << g << " = " << e.text << ";\n";
      }
      if (guarded)
        b << "  }\n";
    }
    bodies[i] = b.str();
  }

  for (int i = 0; i < nhelpers; ++i) {
    const HelperSig &sig = sigs[i];
    out << (sig.returns_int ? "int " : "void ") << sig.name << "(";
    bool first = true;
    if (sig.ref_param) {
      out << "int *p";
      first = false;
    }
    for (int v = 0; v < sig.value_params; ++v) {
      if (!first)
        out << ", ";
      out << "int v" << v;
      first = false;
    }
    out << ") {\n" << bodies[i] << "}\n\n";
  }

  // --- entry -------------------------------------------------------------

  std::set<std::string> entry_writes;
  std::ostringstream mainb;
  std::vector<VarInfo> scope;
  for (auto &g : globals)
    scope.push_back({g, gmag});
  int locals = 0;

  int nstmts = rng.range(2, 4);
  for (int s = 0; s < nstmts; ++s) {
    int choice = rng.range(0, 3);
    if (choice == 0 && nhelpers > 0) {
      // call a helper
      int hi = rng.range(0, nhelpers - 1);
      const HelperSig &h = sigs[hi];
      std::string args;
      bool first = true;
      if (h.ref_param) {
        const std::string &g = rng.pick(globals);
        args += "&" + g;
        first = false;
        entry_writes.insert(g);
        for (auto &vi : scope)
          if (vi.name == g)
            vi.mag = 20000000; // conservative: helper writes up to ~2000^2*k
      }
      for (int a = 0; a < h.value_params; ++a) {
        if (!first)
          args += ", ";
        ExprStr e = gen_expr(rng, scope, 1, false);
        args += e.text;
        first = false;
      }
      if (h.returns_int) {
        std::string target;
        if (rng.chance(50) || locals == 0) {
          target = "t" + std::to_string(locals++);
          mainb << "  int " << target << " = " << h.name << "(" << args << ");\n";
          scope.push_back({target, h.result_mag});
        } else {
          const std::string &g = rng.pick(globals);
          mainb << "  " << g << " = " << h.name << "(" << args << ");\n";
          entry_writes.insert(g);
          for (auto &vi : scope)
            if (vi.name == g)
              vi.mag = h.result_mag;
        }
      } else {
        mainb << "  " << h.name << "(" << args << ");\n";
        for (auto &w : h.writes_globals) {
          entry_writes.insert(w);
          for (auto &vi : scope)
            if (vi.name == w)
              vi.mag = 20000000;
        }
      }
    } else if (choice == 1) {
      ExprStr e = gen_expr(rng, scope, rng.range(1, 2), true);
      std::string target = "t" + std::to_string(locals++);
      mainb << "  int " << target << " = " << e.text << ";\n";
      scope.push_back({target, e.mag});
    } else if (choice == 2) {
      const std::string &g = rng.pick(globals);
      ExprStr e = gen_expr(rng, scope, rng.range(1, 2), true);
      bool guarded = rng.chance(40);
      if (guarded) {
        mainb << "  if (" << gen_cond(rng, scope) << ") {\n  ";
        mainb << "  " << g << " = " << e.text << ";\n  }\n";
      } else {
        mainb << "  " << g << " = " << e.text << ";\n";
      }
      entry_writes.insert(g);
      for (auto &vi : scope)
        if (vi.name == g)
          vi.mag = e.mag;
    } else {
      const std::string &g = rng.pick(globals);
      ExprStr e = gen_expr(rng, scope, 1, true);
      mainb << "  " << g << " = " << e.text << ";\n";
      entry_writes.insert(g);
      for (auto &vi : scope)
        if (vi.name == g)
          vi.mag = e.mag;
    }
  }

  // contract
  out << "/*@ ";
  bool first_clause = true;
  for (auto &g : globals) {
    if (!first_clause)
      out << "    ";
    out << "requires -" << opts.domain << " <= " << g << " && " << g << " <= " << opts.domain << ";\n";
    first_clause = false;
  }
  if (rng.chance(opts.trivial_ensures_pct)) {
    out << "    ensures \\true;\n";
  } else {
    std::vector<StateVar> evars;
    for (auto &g : globals) {
      evars.push_back(StateVar::cur(Location{LocKind::Global, g, ""}));
      evars.push_back(StateVar::old(Location{LocKind::Global, g, ""}));
    }
    FormulaRef ens = random_formula(rng, evars, rng.range(1, 2), true);
    out << "    ensures " << render_formula(ens) << ";\n";
  }
  if (opts.emit_entry_assigns) {
    out << "    assigns ";
    if (entry_writes.empty()) {
      out << "\\nothing";
    } else {
      bool f = true;
      for (auto &g : entry_writes) {
        if (!f)
          out << ", ";
        out << g;
        f = false;
      }
    }
    out << ";\n";
  }
  out << "*/\n";
  out << "void main() {\n" << mainb.str() << "}\n";
  return out.str();
}

std::string random_statements(Rng &rng, const std::vector<std::string> &globals, int64_t domain,
                              int depth) {
  std::vector<VarInfo> scope;
  for (auto &g : globals)
    scope.push_back({g, domain});
  std::ostringstream out;
  std::function<void(int, int)> emit = [&](int n, int ind) {
    std::string pad(2 * ind, ' ');
    for (int i = 0; i < n; ++i) {
      int kind = rng.range(0, 3);
      if (kind == 3 && ind < depth + 1) {
        out << pad << "if (" << gen_cond(rng, scope) << ") {\n";
        emit(rng.range(1, 2), ind + 1);
        if (rng.chance(60)) {
          out << pad << "} else {\n";
          emit(rng.range(1, 2), ind + 1);
        }
        out << pad << "}\n";
      } else {
        const std::string &g = rng.pick(globals);
        ExprStr e = gen_expr(rng, scope, rng.range(1, 2), true);
        out << pad << g << " = " << e.text << ";\n";
        for (auto &vi : scope)
          if (vi.name == g)
            vi.mag = std::max(vi.mag, e.mag);
      }
    }
  };
  emit(rng.range(1, 3), 1);
  return out.str();
}

std::string wrap_subject(const std::vector<std::string> &globals, const std::string &body) {
  std::ostringstream out;
  for (auto &g : globals)
    out << "int " << g << ";\n";
  out << "\n/*@ requires \\true;\n    ensures \\true;\n*/\nvoid subject() {\n" << body << "}\n";
  return out.str();
}

} // namespace microdeduct::testgen
