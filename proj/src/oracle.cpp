#include "microdeduct/oracle.hpp"

#include <algorithm>

namespace microdeduct {

namespace {

constexpr int64_t kIntMin = -2147483648LL;
constexpr int64_t kIntMax = 2147483647LL;

bool in_machine_range(int64_t v) { return v >= kIntMin && v <= kIntMax; }

struct Interp {
  const ModuleAst &m;
  const PointObserver &obs;
  Env env;
  long steps_left = 0;
  RunOutcome::Kind status = RunOutcome::Kind::Ok;
  RunOutcome::FaultKind fault = RunOutcome::FaultKind::Overflow;
  SourceSpan fault_span;

  struct Frame {
    const FunctionDef *fn = nullptr;
    std::map<std::string, Location> ref_targets;
  };

  bool fault_out(RunOutcome::FaultKind k, SourceSpan sp) {
    status = RunOutcome::Kind::Fault;
    fault = k;
    fault_span = sp;
    return false;
  }

  // Checked 32-bit arithmetic over terms; (ok=false) aborts the run.
  bool eval(TermRef t, const Frame &fr, SourceSpan sp, int64_t &out) {
    switch (t->kind()) {
    case TermKind::IntConst:
      out = t->value();
      if (!in_machine_range(out))
        return fault_out(RunOutcome::FaultKind::Overflow, sp);
      return true;
    case TermKind::LocRef: {
      Location l = t->loc();
      if (l.kind == LocKind::DerefParam) {
        auto it = fr.ref_targets.find(l.name);
        if (it == fr.ref_targets.end())
          return fault_out(RunOutcome::FaultKind::InvalidDeref, sp);
        l = it->second;
      }
      auto it = env.values.find(l);
      if (it == env.values.end())
        return fault_out(RunOutcome::FaultKind::InvalidDeref, sp);
      out = it->second;
      return true;
    }
    case TermKind::Negate: {
      int64_t a;
      if (!eval(t->lhs(), fr, sp, a))
        return false;
      out = -a;
      if (!in_machine_range(out))
        return fault_out(RunOutcome::FaultKind::Overflow, sp);
      return true;
    }
    case TermKind::Add:
    case TermKind::Sub:
    case TermKind::Mul: {
      int64_t a, b;
      if (!eval(t->lhs(), fr, sp, a) || !eval(t->rhs(), fr, sp, b))
        return false;
      out = t->kind() == TermKind::Add ? a + b : t->kind() == TermKind::Sub ? a - b : a * b;
      if (!in_machine_range(out))
        return fault_out(RunOutcome::FaultKind::Overflow, sp);
      return true;
    }
    default:
      // \old, \result, symbolic constants never occur in program expressions
      return fault_out(RunOutcome::FaultKind::InvalidDeref, sp);
    }
  }

  bool eval_cond(FormulaRef f, const Frame &fr, SourceSpan sp, bool &out) {
    switch (f->kind()) {
    case FormulaKind::BoolConst:
      out = f->bool_value();
      return true;
    case FormulaKind::Compare: {
      int64_t a, b;
      if (!eval(f->cmp_lhs(), fr, sp, a) || !eval(f->cmp_rhs(), fr, sp, b))
        return false;
      switch (f->cmp_op()) {
      case CmpOp::Eq:
        out = a == b;
        break;
      case CmpOp::Ne:
        out = a != b;
        break;
      case CmpOp::Lt:
        out = a < b;
        break;
      case CmpOp::Le:
        out = a <= b;
        break;
      case CmpOp::Gt:
        out = a > b;
        break;
      case CmpOp::Ge:
        out = a >= b;
        break;
      }
      return true;
    }
    case FormulaKind::Valid:
      out = true;
      return true;
    case FormulaKind::Not: {
      bool a;
      if (!eval_cond(f->lhs(), fr, sp, a))
        return false;
      out = !a;
      return true;
    }
    case FormulaKind::And:
    case FormulaKind::Or:
    case FormulaKind::Implies: {
      bool a, b;
      if (!eval_cond(f->lhs(), fr, sp, a) || !eval_cond(f->rhs(), fr, sp, b))
        return false;
      out = f->kind() == FormulaKind::And ? (a && b) : f->kind() == FormulaKind::Or ? (a || b) : (!a || b);
      return true;
    }
    }
    return false;
  }

  bool store(const Location &l, const Frame &fr, SourceSpan sp, int64_t v) {
    if (!in_machine_range(v))
      return fault_out(RunOutcome::FaultKind::Overflow, sp);
    Location dest = l;
    if (l.kind == LocKind::DerefParam) {
      auto it = fr.ref_targets.find(l.name);
      if (it == fr.ref_targets.end())
        return fault_out(RunOutcome::FaultKind::InvalidDeref, sp);
      dest = it->second;
    }
    env.values[dest] = v;
    return true;
  }

  enum class Flow { Normal, Returned, Aborted };

  Flow run_call(const CallExpr &c, const Frame &fr, SourceSpan sp, std::optional<int64_t> &ret) {
    const FunctionDef *callee = m.find_function(c.callee);
    if (!callee) {
      fault_out(RunOutcome::FaultKind::InvalidDeref, sp);
      return Flow::Aborted;
    }
    std::vector<CallValue> args;
    for (auto &a : c.args) {
      switch (a.kind) {
      case CallArg::Kind::Value: {
        int64_t v;
        if (!eval(a.value, fr, sp, v))
          return Flow::Aborted;
        args.push_back(CallValue::of(v));
        break;
      }
      case CallArg::Kind::AddrOf:
        args.push_back(CallValue::ref(a.target));
        break;
      case CallArg::Kind::RefParam: {
        auto it = fr.ref_targets.find(a.target.name);
        if (it == fr.ref_targets.end()) {
          fault_out(RunOutcome::FaultKind::InvalidDeref, sp);
          return Flow::Aborted;
        }
        args.push_back(CallValue::ref(it->second));
        break;
      }
      }
    }
    return call(*callee, args, ret);
  }

  Flow call(const FunctionDef &fn, const std::vector<CallValue> &args, std::optional<int64_t> &ret) {
    Frame fr;
    fr.fn = &fn;
    for (size_t i = 0; i < fn.params.size(); ++i) {
      const Param &p = fn.params[i];
      if (p.kind == ParamKind::Reference) {
        if (!args[i].by_ref || !env.values.count(args[i].target)) {
          fault_out(RunOutcome::FaultKind::InvalidDeref, fn.span);
          return Flow::Aborted;
        }
        fr.ref_targets[p.name] = args[i].target;
      } else {
        if (!in_machine_range(args[i].value)) {
          fault_out(RunOutcome::FaultKind::Overflow, fn.span);
          return Flow::Aborted;
        }
        env.values[fn.param_loc(p.name)] = args[i].value;
      }
    }
    Flow fl = run_stmts(fn.body, fr, ret);
    // frame cells die with the call
    for (auto &p : fn.params)
      if (p.kind == ParamKind::Value)
        env.values.erase(fn.param_loc(p.name));
    for (auto &l : fn.locals)
      env.values.erase(fn.local_loc(l));
    return fl;
  }

  Flow run_stmts(const std::vector<Stmt> &body, Frame &fr, std::optional<int64_t> &ret) {
    for (auto &s : body) {
      if (--steps_left < 0) {
        status = RunOutcome::Kind::Budget;
        return Flow::Aborted;
      }
      if (obs)
        obs(s.point, env);
      switch (s.kind) {
      case StmtKind::Decl:
      case StmtKind::Assign:
      case StmtKind::DerefAssign: {
        int64_t v;
        if (s.call) {
          std::optional<int64_t> r;
          if (run_call(*s.call, fr, s.span, r) == Flow::Aborted)
            return Flow::Aborted;
          v = r.value_or(0);
        } else {
          if (!eval(s.expr, fr, s.span, v))
            return Flow::Aborted;
        }
        if (!store(s.target, fr, s.span, v))
          return Flow::Aborted;
        break;
      }
      case StmtKind::If: {
        bool c;
        if (!eval_cond(s.cond, fr, s.span, c))
          return Flow::Aborted;
        Flow fl = run_stmts(c ? s.then_body : s.else_body, fr, ret);
        if (fl != Flow::Normal)
          return fl;
        break;
      }
      case StmtKind::While: {
        for (;;) {
          if (--steps_left < 0) {
            status = RunOutcome::Kind::Budget;
            return Flow::Aborted;
          }
          bool c;
          if (!eval_cond(s.cond, fr, s.span, c))
            return Flow::Aborted;
          if (!c)
            break;
          Flow fl = run_stmts(s.body, fr, ret);
          if (fl != Flow::Normal)
            return fl;
        }
        break;
      }
      case StmtKind::Return: {
        if (s.ret) {
          int64_t v;
          if (!eval(*s.ret, fr, s.span, v))
            return Flow::Aborted;
          ret = v;
        }
        return Flow::Returned;
      }
      case StmtKind::CallStmt: {
        std::optional<int64_t> r;
        if (run_call(*s.call, fr, s.span, r) == Flow::Aborted)
          return Flow::Aborted;
        break;
      }
      }
    }
    return Flow::Normal;
  }
};

} // namespace

RunOutcome exec_function(const ModuleAst &m, const std::string &fn, const Env &env,
                         const std::vector<CallValue> &args, const ExecLimits &lim,
                         const PointObserver &obs) {
  RunOutcome out;
  const FunctionDef *f = m.find_function(fn);
  if (!f) {
    out.kind = RunOutcome::Kind::Fault;
    out.fault = RunOutcome::FaultKind::InvalidDeref;
    return out;
  }
  Interp it{m, obs, env, lim.step_budget, RunOutcome::Kind::Ok, RunOutcome::FaultKind::Overflow, {}};
  for (auto &g : m.globals)
    it.env.values.try_emplace(m.global_loc(g.name), 0);
  std::optional<int64_t> ret;
  it.call(*f, args, ret);
  out.kind = it.status;
  out.fault = it.fault;
  out.fault_span = it.fault_span;
  if (out.kind == RunOutcome::Kind::Ok) {
    out.env = std::move(it.env);
    out.ret = ret;
  }
  return out;
}

DomainBounds uniform_bounds(const ModuleAst &m, const std::string &fn, int64_t lo, int64_t hi) {
  DomainBounds b;
  for (auto &g : m.globals)
    b.ranges[m.global_loc(g.name)] = {lo, hi};
  if (const FunctionDef *f = m.find_function(fn)) {
    for (auto &p : f->params) {
      if (p.kind == ParamKind::Reference)
        b.ranges[f->deref_loc(p.name)] = {lo, hi};
      else
        b.ranges[f->param_loc(p.name)] = {lo, hi};
    }
  }
  return b;
}

namespace {

// Fixed enumeration order: lexicographic by rendered location name.
std::vector<std::pair<Location, std::pair<int64_t, int64_t>>> ordered_ranges(const DomainBounds &b) {
  std::vector<std::pair<Location, std::pair<int64_t, int64_t>>> v(b.ranges.begin(), b.ranges.end());
  std::sort(v.begin(), v.end(), [](auto &a, auto &c) {
    std::string an = render_location(a.first), cn = render_location(c.first);
    if (an != cn)
      return an < cn;
    return a.first < c.first;
  });
  return v;
}

bool domain_too_large(const std::vector<std::pair<Location, std::pair<int64_t, int64_t>>> &rs, long cap) {
  long double prod = 1;
  for (auto &[l, r] : rs) {
    prod *= static_cast<long double>(r.second - r.first + 1);
    if (prod > static_cast<long double>(cap))
      return true;
  }
  return false;
}

} // namespace

ContractCheck check_contract(const ModuleAst &m, const std::string &fn, const Contract &c,
                             const DomainBounds &bounds, const OracleOptions &opts) {
  ContractCheck res;
  const FunctionDef *f = m.find_function(fn);
  if (!f) {
    res.kind = ContractCheck::Kind::Refused;
    res.detail = "unknown function '" + fn + "'";
    return res;
  }

  auto rs = ordered_ranges(bounds);
  if (domain_too_large(rs, opts.enumeration_cap)) {
    res.kind = ContractCheck::Kind::Refused;
    res.detail = "domain larger than enumeration cap";
    return res;
  }
  for (auto &g : m.globals) {
    if (!bounds.ranges.count(m.global_loc(g.name))) {
      res.kind = ContractCheck::Kind::Refused;
      res.detail = "no bounds for global '" + g.name + "'";
      return res;
    }
  }
  for (auto &p : f->params) {
    Location l = p.kind == ParamKind::Reference ? f->deref_loc(p.name) : f->param_loc(p.name);
    if (!bounds.ranges.count(l)) {
      res.kind = ContractCheck::Kind::Refused;
      res.detail = "no bounds for parameter '" + p.name + "'";
      return res;
    }
  }

  std::set<Location> assigns_set;
  if (c.assigns)
    assigns_set.insert(c.assigns->locations.begin(), c.assigns->locations.end());

  std::vector<int64_t> cursor(rs.size());
  for (size_t i = 0; i < rs.size(); ++i)
    cursor[i] = rs[i].second.first;

  for (;;) {
    Env pre;
    for (size_t i = 0; i < rs.size(); ++i)
      pre.values[rs[i].first] = cursor[i];

    // requires over the pre-state
    Valuation pre_val;
    for (auto &[l, v] : pre.values)
      pre_val[StateVar::cur(l)] = v;
    std::optional<bool> req = eval_formula(c.requires_conj(), pre_val);
    if (!req) {
      res.kind = ContractCheck::Kind::Refused;
      res.detail = "requires evaluation failed (unbound name or overflow)";
      return res;
    }

    if (*req) {
      ++res.cases;
      std::vector<CallValue> args;
      for (auto &p : f->params) {
        if (p.kind == ParamKind::Reference)
          args.push_back(CallValue::ref(f->deref_loc(p.name)));
        else
          args.push_back(CallValue::of(pre.values.at(f->param_loc(p.name))));
      }
      RunOutcome run = exec_function(m, fn, pre, args, opts.exec, opts.observer);
      if (run.kind == RunOutcome::Kind::Budget) {
        res.kind = ContractCheck::Kind::Budget;
        res.counterexample = pre;
        res.detail = "step budget exhausted";
        return res;
      }
      if (run.kind == RunOutcome::Kind::Fault) {
        res.kind = ContractCheck::Kind::Counterexample;
        res.counterexample = pre;
        res.detail = run.fault == RunOutcome::FaultKind::Overflow ? "arithmetic overflow"
                                                                  : "invalid dereference";
        return res;
      }

      // ensures over (pre, post, result)
      Valuation val;
      for (auto &[l, v] : pre.values)
        val[StateVar::old(l)] = v;
      for (auto &[l, v] : run.env.values)
        val[StateVar::cur(l)] = v;
      // value parameters read the same pre/post
      for (auto &p : f->params)
        if (p.kind == ParamKind::Value)
          val[StateVar::cur(f->param_loc(p.name))] = pre.values.at(f->param_loc(p.name));
      if (run.ret)
        val[StateVar::result()] = *run.ret;
      std::optional<bool> ens = eval_formula(c.ensures_conj(), val);
      if (!ens) {
        res.kind = ContractCheck::Kind::Refused;
        res.detail = "ensures evaluation failed (unbound name or overflow)";
        return res;
      }
      if (!*ens) {
        res.kind = ContractCheck::Kind::Counterexample;
        res.counterexample = pre;
        res.detail = "ensures violated";
        return res;
      }

      // exact frame check: anything outside assigns must be unchanged
      if (c.assigns) {
        for (auto &[l, v] : pre.values) {
          if (l.kind == LocKind::Param)
            continue;
          if (assigns_set.count(l))
            continue;
          Location key = l;
          if (l.kind == LocKind::DerefParam) {
            // synthetic cell; assigns names the deref location itself
          }
          auto it = run.env.values.find(key);
          if (it != run.env.values.end() && it->second != v) {
            res.kind = ContractCheck::Kind::Counterexample;
            res.counterexample = pre;
            res.detail = "assigns violated: wrote '" + render_location(l) + "'";
            return res;
          }
        }
      }
    }

    // odometer
    size_t k = rs.size();
    while (k > 0) {
      --k;
      if (cursor[k] < rs[k].second.second) {
        ++cursor[k];
        for (size_t j = k + 1; j < rs.size(); ++j)
          cursor[j] = rs[j].second.first;
        break;
      }
      if (k == 0) {
        res.kind = ContractCheck::Kind::Holds;
        return res;
      }
    }
    if (rs.empty())
      break;
  }

  // no enumerable locations: single empty case already covered above
  res.kind = ContractCheck::Kind::Holds;
  return res;
}

FormulaCheck check_formula(FormulaRef f, const VarBounds &bounds, long cap) {
  FormulaCheck res;
  std::set<StateVar> vars = state_vars_of(f);
  std::vector<std::pair<StateVar, std::pair<int64_t, int64_t>>> rs;
  for (auto &v : vars) {
    auto it = bounds.ranges.find(v);
    if (it == bounds.ranges.end()) {
      res.refused = true;
      res.refusal_reason = "no bounds for '" + render_state_var(v) + "'";
      return res;
    }
    rs.push_back({v, it->second});
  }
  std::sort(rs.begin(), rs.end(), [](auto &a, auto &b) {
    std::string an = render_state_var(a.first), bn = render_state_var(b.first);
    if (an != bn)
      return an < bn;
    return a.first < b.first;
  });

  long double prod = 1;
  for (auto &[v, r] : rs) {
    prod *= static_cast<long double>(r.second - r.first + 1);
    if (prod > static_cast<long double>(cap)) {
      res.refused = true;
      res.refusal_reason = "domain larger than enumeration cap";
      return res;
    }
  }

  std::vector<int64_t> cursor(rs.size());
  for (size_t i = 0; i < rs.size(); ++i)
    cursor[i] = rs[i].second.first;
  res.holds_for_all = true;

  for (;;) {
    Valuation val;
    for (size_t i = 0; i < rs.size(); ++i)
      val[rs[i].first] = cursor[i];
    std::optional<bool> v = eval_formula(f, val);
    if (!v) {
      res.refused = true;
      res.refusal_reason = "evaluation overflow";
      return res;
    }
    if (*v) {
      if (!res.witness)
        res.witness = val;
    } else {
      res.holds_for_all = false;
      if (!res.counterexample)
        res.counterexample = val;
    }

    size_t k = rs.size();
    bool done = rs.empty();
    while (k > 0) {
      --k;
      if (cursor[k] < rs[k].second.second) {
        ++cursor[k];
        for (size_t j = k + 1; j < rs.size(); ++j)
          cursor[j] = rs[j].second.first;
        break;
      }
      if (k == 0)
        done = true;
    }
    if (done)
      break;
  }
  return res;
}

FormulaCheck check_formula(FormulaRef f, int64_t lo, int64_t hi, long cap) {
  VarBounds b;
  for (auto &v : state_vars_of(f))
    b.ranges[v] = {lo, hi};
  return check_formula(f, b, cap);
}

} // namespace microdeduct
