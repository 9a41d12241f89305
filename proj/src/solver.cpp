#include "microdeduct/solver.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <ostream>

namespace microdeduct {

namespace {

struct OverflowBail {};
struct DegreeBail {};

int64_t ck_add(int64_t a, int64_t b) {
  int64_t r;
  if (__builtin_add_overflow(a, b, &r))
    throw OverflowBail{};
  return r;
}

int64_t ck_mul(int64_t a, int64_t b) {
  int64_t r;
  if (__builtin_mul_overflow(a, b, &r))
    throw OverflowBail{};
  return r;
}

int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b, r = a % b;
  if (r != 0 && ((r < 0) != (b < 0)))
    --q;
  return q;
}

int64_t ceil_div(int64_t a, int64_t b) { return -floor_div(-a, b); }

constexpr int64_t kInfPos = INT64_MAX;
constexpr int64_t kInfNeg = INT64_MIN;

// Linear combination over atom ids (base variables and product monomials).
struct Poly {
  std::map<int, int64_t> c;
  int64_t k = 0;

  void add_entry(int id, int64_t coeff) {
    if (coeff == 0)
      return;
    auto [it, fresh] = c.emplace(id, coeff);
    if (!fresh) {
      it->second = ck_add(it->second, coeff);
      if (it->second == 0)
        c.erase(it);
    }
  }

  void add(const Poly &o, int64_t scale) {
    for (auto &[id, coeff] : o.c)
      add_entry(id, ck_mul(coeff, scale));
    k = ck_add(k, ck_mul(o.k, scale));
  }

  bool ground() const { return c.empty(); }
  bool singleton() const { return c.size() == 1; }
};

struct LinAtom {
  bool is_eq = false; // Eq: p == 0; otherwise p <= 0
  Poly p;
};

// One DNF cube: the original literals (for exact re-evaluation) plus the
// normalized linear system.
struct Lit {
  FormulaRef atom = nullptr; // Compare
  bool neg = false;
};

using Cube = std::vector<Lit>;

struct Bounds {
  int64_t lo = kInfNeg;
  int64_t hi = kInfPos;

  bool lo_finite() const { return lo != kInfNeg; }
  bool hi_finite() const { return hi != kInfPos; }
  bool empty() const { return lo_finite() && hi_finite() && lo > hi; }
};

Bounds mul_bounds(const Bounds &a, const Bounds &b) {
  // four-corner rule; any infinite operand makes the result unbounded unless
  // both sides are single points
  if (!a.lo_finite() || !a.hi_finite() || !b.lo_finite() || !b.hi_finite())
    return {};
  try {
    int64_t c1 = ck_mul(a.lo, b.lo), c2 = ck_mul(a.lo, b.hi);
    int64_t c3 = ck_mul(a.hi, b.lo), c4 = ck_mul(a.hi, b.hi);
    return {std::min(std::min(c1, c2), std::min(c3, c4)), std::max(std::max(c1, c2), std::max(c3, c4))};
  } catch (OverflowBail &) {
    return {};
  }
}

// ---------------------------------------------------------------------------
// DNF construction (negation normal form built in).
// ---------------------------------------------------------------------------

struct DnfBuilder {
  int cap;
  bool overflowed = false;

  std::vector<Cube> lit(FormulaRef atom, bool neg) { return {{Lit{atom, neg}}}; }

  std::vector<Cube> conj(std::vector<Cube> a, std::vector<Cube> b) {
    std::vector<Cube> out;
    if (static_cast<long>(a.size()) * static_cast<long>(b.size()) > cap) {
      overflowed = true;
      return out;
    }
    for (auto &x : a)
      for (auto &y : b) {
        Cube c = x;
        c.insert(c.end(), y.begin(), y.end());
        out.push_back(std::move(c));
      }
    return out;
  }

  std::vector<Cube> disj(std::vector<Cube> a, std::vector<Cube> b) {
    if (static_cast<long>(a.size()) + static_cast<long>(b.size()) > cap) {
      overflowed = true;
      return {};
    }
    for (auto &y : b)
      a.push_back(std::move(y));
    return a;
  }

  std::vector<Cube> build(FormulaRef f, bool neg) {
    if (overflowed)
      return {};
    switch (f->kind()) {
    case FormulaKind::BoolConst: {
      bool v = f->bool_value() != neg;
      if (v)
        return {Cube{}}; // one empty cube: true
      return {};         // no cubes: false
    }
    case FormulaKind::Valid:
      // always true in MicroC (reference arguments are addresses of live
      // variables); a negated validity atom kills its cube
      return neg ? std::vector<Cube>{} : std::vector<Cube>{Cube{}};
    case FormulaKind::Compare: {
      CmpOp op = f->cmp_op();
      if (neg) {
        switch (op) {
        case CmpOp::Eq:
          op = CmpOp::Ne;
          break;
        case CmpOp::Ne:
          op = CmpOp::Eq;
          break;
        case CmpOp::Lt:
          op = CmpOp::Ge;
          break;
        case CmpOp::Le:
          op = CmpOp::Gt;
          break;
        case CmpOp::Gt:
          op = CmpOp::Le;
          break;
        case CmpOp::Ge:
          op = CmpOp::Lt;
          break;
        }
      }
      if (op == CmpOp::Ne) {
        // disequality splits: a < b  or  a > b
        return disj(lit(mk_cmp(CmpOp::Lt, f->cmp_lhs(), f->cmp_rhs()), false),
                    lit(mk_cmp(CmpOp::Gt, f->cmp_lhs(), f->cmp_rhs()), false));
      }
      return lit(mk_cmp(op, f->cmp_lhs(), f->cmp_rhs()), false);
    }
    case FormulaKind::Not:
      return build(f->lhs(), !neg);
    case FormulaKind::And:
      if (!neg)
        return conj(build(f->lhs(), false), build(f->rhs(), false));
      return disj(build(f->lhs(), true), build(f->rhs(), true));
    case FormulaKind::Or:
      if (!neg)
        return disj(build(f->lhs(), false), build(f->rhs(), false));
      return conj(build(f->lhs(), true), build(f->rhs(), true));
    case FormulaKind::Implies:
      if (!neg)
        return disj(build(f->lhs(), true), build(f->rhs(), false));
      return conj(build(f->lhs(), false), build(f->rhs(), true));
    }
    return {};
  }
};

// ---------------------------------------------------------------------------
// Per-query variable numbering: base StateVars first (sorted), product
// monomials discovered on demand.
// ---------------------------------------------------------------------------

struct VarTable {
  std::vector<StateVar> base;            // id -> var
  std::map<StateVar, int> base_ids;      // var -> id
  std::vector<std::vector<int>> monos;   // (id - base.size()) -> sorted base ids
  std::map<std::vector<int>, int> mono_ids;

  int base_count() const { return static_cast<int>(base.size()); }
  bool is_mono(int id) const { return id >= base_count(); }
  const std::vector<int> &mono_vars(int id) const { return monos[id - base_count()]; }

  int mono_id(std::vector<int> vars) {
    if (vars.size() > 6)
      throw DegreeBail{};
    auto it = mono_ids.find(vars);
    if (it != mono_ids.end())
      return it->second;
    int id = base_count() + static_cast<int>(monos.size());
    monos.push_back(vars);
    mono_ids.emplace(std::move(vars), id);
    return id;
  }
};

// Polynomial form of a term: product of polynomials expands monomials.
Poly term_to_poly(TermRef t, VarTable &vars) {
  switch (t->kind()) {
  case TermKind::IntConst: {
    Poly p;
    p.k = t->value();
    return p;
  }
  case TermKind::LocRef:
  case TermKind::OldRef:
  case TermKind::ResultRef:
  case TermKind::SymRef: {
    StateVar v = t->kind() == TermKind::LocRef      ? StateVar::cur(t->loc())
                 : t->kind() == TermKind::OldRef    ? StateVar::old(t->loc())
                 : t->kind() == TermKind::ResultRef ? StateVar::result()
                                                    : StateVar::sym(t->sym_name(), t->sym_id());
    Poly p;
    p.add_entry(vars.base_ids.at(v), 1);
    return p;
  }
  case TermKind::Negate: {
    Poly a = term_to_poly(t->lhs(), vars);
    Poly p;
    p.add(a, -1);
    return p;
  }
  case TermKind::Add: {
    Poly p = term_to_poly(t->lhs(), vars);
    p.add(term_to_poly(t->rhs(), vars), 1);
    return p;
  }
  case TermKind::Sub: {
    Poly p = term_to_poly(t->lhs(), vars);
    p.add(term_to_poly(t->rhs(), vars), -1);
    return p;
  }
  case TermKind::Mul: {
    Poly a = term_to_poly(t->lhs(), vars);
    Poly b = term_to_poly(t->rhs(), vars);
    auto factors_of = [&](int id) -> std::vector<int> {
      if (vars.is_mono(id))
        return vars.mono_vars(id);
      return {id};
    };
    Poly p;
    p.k = ck_mul(a.k, b.k);
    for (auto &[id, c] : a.c)
      p.add_entry(id, ck_mul(c, b.k));
    for (auto &[id, c] : b.c)
      p.add_entry(id, ck_mul(c, a.k));
    for (auto &[ia, ca] : a.c)
      for (auto &[ib, cb] : b.c) {
        std::vector<int> m = factors_of(ia);
        std::vector<int> mb = factors_of(ib);
        m.insert(m.end(), mb.begin(), mb.end());
        std::sort(m.begin(), m.end());
        p.add_entry(vars.mono_id(std::move(m)), ck_mul(ca, cb));
      }
    return p;
  }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Cube decision.
// ---------------------------------------------------------------------------

struct CubeResult {
  enum class Kind { Sat, Unsat, Unknown } kind = Kind::Unknown;
  Valuation model;
  std::string reason;
};

struct CubeSolver {
  const SolverLimits &lim;
  FormulaRef original; // whole query, for model self-checks
  const Cube &cube;
  VarTable vars;
  std::vector<LinAtom> atoms;
  // substitution map: id -> constant or unit variable
  std::map<int, Poly> subst;

  CubeSolver(const SolverLimits &l, FormulaRef orig, const Cube &c, const std::set<StateVar> &sv)
      : lim(l), original(orig), cube(c) {
    for (auto &v : sv) {
      vars.base_ids.emplace(v, static_cast<int>(vars.base.size()));
      vars.base.push_back(v);
    }
  }

  // --- normalization ----------------------------------------------------

  bool build_atoms() {
    for (auto &l : cube) {
      FormulaRef a = l.atom;
      Poly p = term_to_poly(a->cmp_lhs(), vars);
      Poly rhs = term_to_poly(a->cmp_rhs(), vars);
      LinAtom la;
      switch (a->cmp_op()) {
      case CmpOp::Eq:
        la.is_eq = true;
        p.add(rhs, -1);
        break;
      case CmpOp::Le:
        p.add(rhs, -1);
        break;
      case CmpOp::Lt:
        p.add(rhs, -1);
        p.k = ck_add(p.k, 1); // a < b  <=>  a - b + 1 <= 0
        break;
      case CmpOp::Ge: {
        Poly q = rhs;
        q.add(p, -1);
        p = std::move(q);
        break;
      }
      case CmpOp::Gt: {
        Poly q = rhs;
        q.add(p, -1);
        q.k = ck_add(q.k, 1);
        p = std::move(q);
        break;
      }
      case CmpOp::Ne:
        return false; // split during DNF construction
      }
      la.p = std::move(p);
      atoms.push_back(std::move(la));
    }
    return true;
  }

  // Applies the substitution map to an atom id, following chains and
  // re-canonicalizing monomials whose factors were bound or renamed.
  Poly reduce_id(int id, int depth = 0) {
    if (depth > 64) {
      Poly p;
      p.add_entry(id, 1);
      return p;
    }
    auto it = subst.find(id);
    if (it != subst.end()) {
      const Poly &s = it->second;
      if (s.ground())
        return s;
      int tgt = s.c.begin()->first;
      int64_t c = s.c.begin()->second;
      Poly r = reduce_id(tgt, depth + 1);
      Poly out;
      out.k = s.k;
      out.add(r, c);
      return out;
    }
    if (!vars.is_mono(id)) {
      Poly p;
      p.add_entry(id, 1);
      return p;
    }
    int64_t coeff = 1;
    std::vector<int> remaining;
    bool changed = false;
    for (int v : vars.mono_vars(id)) {
      Poly r = reduce_id(v, depth + 1);
      if (r.ground()) {
        coeff = ck_mul(coeff, r.k);
        changed = true;
        continue;
      }
      int rv = r.c.begin()->first;
      coeff = ck_mul(coeff, r.c.begin()->second);
      if (rv != v || r.k != 0) {
        // renames keep the monomial canonical; anything richer than a unit
        // rename is not substituted into monomials
        if (r.k != 0 || r.c.size() != 1) {
          remaining.push_back(v);
          continue;
        }
        changed = true;
      }
      remaining.push_back(rv);
    }
    Poly p;
    if (!changed) {
      p.add_entry(id, 1);
      return p;
    }
    if (coeff == 0 || remaining.empty()) {
      p.k = coeff;
      return p;
    }
    std::sort(remaining.begin(), remaining.end());
    if (remaining.size() == 1) {
      Poly r = reduce_id(remaining[0], depth + 1);
      p.add(r, coeff);
      return p;
    }
    int canon = vars.mono_id(std::move(remaining));
    if (canon != id)
      return reduce_id(canon, depth + 1);
    p.add_entry(canon, coeff);
    return p;
  }

  Poly reduce_poly(const Poly &p) {
    Poly out;
    out.k = p.k;
    for (auto &[id, c] : p.c) {
      Poly r = reduce_id(id);
      out.add(r, c);
    }
    return out;
  }

  // Equality propagation and congruence over monomials. Returns false on a
  // ground contradiction.
  bool propagate() {
    for (int round = 0; round < 64; ++round) {
      bool changed = false;
      for (auto &a : atoms) {
        Poly reduced = reduce_poly(a.p);
        if (reduced.c != a.p.c || reduced.k != a.p.k) {
          a.p = std::move(reduced);
          changed = true;
        }
      }

      for (auto &a : atoms) {
        if (a.p.ground()) {
          if (a.is_eq ? (a.p.k != 0) : (a.p.k > 0))
            return false;
          continue;
        }
        if (!a.is_eq)
          continue;
        // gcd tightening on equalities
        int64_t g = 0;
        for (auto &[id, c] : a.p.c)
          g = std::gcd(g, c < 0 ? -c : c);
        if (g > 1) {
          if (a.p.k % g != 0)
            return false;
          for (auto &[id, c] : a.p.c)
            c /= g;
          a.p.k /= g;
        }
        if (a.p.singleton()) {
          auto [id, c] = *a.p.c.begin();
          if (a.p.k % c != 0)
            return false;
          int64_t v = -a.p.k / c;
          // monomials keep their definition; binding them would hide the
          // product constraint from congruence
          if (!vars.is_mono(id) && !subst.count(id)) {
            Poly val;
            val.k = v;
            subst.emplace(id, val);
            changed = true;
          }
          continue;
        }
        if (a.p.c.size() == 2 && a.p.k == 0) {
          auto it = a.p.c.begin();
          auto [id1, c1] = *it;
          ++it;
          auto [id2, c2] = *it;
          if (c1 + c2 == 0 && (c1 == 1 || c1 == -1)) {
            int from, to;
            bool m1 = vars.is_mono(id1), m2 = vars.is_mono(id2);
            if (m1 == m2) {
              from = std::max(id1, id2);
              to = std::min(id1, id2);
            } else {
              // substitute the base variable toward the monomial
              from = m1 ? id2 : id1;
              to = m1 ? id1 : id2;
            }
            if (!subst.count(from)) {
              Poly val;
              val.add_entry(to, 1);
              subst.emplace(from, val);
              changed = true;
            }
          }
        }
      }
      if (!changed)
        return true;
    }
    return true;
  }

  // --- derived interval bounds -------------------------------------------

  std::map<int, Bounds> derive_bounds() {
    std::map<int, Bounds> b;
    auto tighten_lo = [&](int id, int64_t v) {
      Bounds &x = b[id];
      if (!x.lo_finite() || v > x.lo)
        x.lo = v;
    };
    auto tighten_hi = [&](int id, int64_t v) {
      Bounds &x = b[id];
      if (!x.hi_finite() || v < x.hi)
        x.hi = v;
    };

    for (int round = 0; round < 4; ++round) {
      for (auto &a : atoms) {
        // For each entry, bound it by the interval of the rest:
        //   c*v <= -k - sum(others)
        for (auto &[id, c] : a.p.c) {
          Bounds rest{0, 0};
          bool ok = true;
          for (auto &[id2, c2] : a.p.c) {
            if (id2 == id)
              continue;
            auto it = b.find(id2);
            Bounds bb = it == b.end() ? Bounds{} : it->second;
            Bounds scaled = mul_bounds(bb, Bounds{c2, c2});
            if (!scaled.lo_finite() && !scaled.hi_finite() && !(bb.lo_finite() && bb.hi_finite())) {
              ok = false;
              break;
            }
            try {
              rest.lo = rest.lo_finite() && scaled.lo_finite() ? ck_add(rest.lo, scaled.lo) : kInfNeg;
              rest.hi = rest.hi_finite() && scaled.hi_finite() ? ck_add(rest.hi, scaled.hi) : kInfPos;
            } catch (OverflowBail &) {
              ok = false;
              break;
            }
          }
          if (!ok)
            continue;
          try {
            if (rest.lo_finite()) {
              // c*v <= -k - rest.lo
              int64_t m = ck_add(-a.p.k, -rest.lo);
              if (c > 0)
                tighten_hi(id, floor_div(m, c));
              else
                tighten_lo(id, ceil_div(m, c));
            }
            if (a.is_eq && rest.hi_finite()) {
              int64_t m = ck_add(-a.p.k, -rest.hi);
              if (c > 0)
                tighten_lo(id, ceil_div(m, c));
              else
                tighten_hi(id, floor_div(m, c));
            }
          } catch (OverflowBail &) {
          }
        }
      }
      // monomial bounds from factor bounds; even powers are non-negative
      for (size_t mi = 0; mi < vars.monos.size(); ++mi) {
        int id = vars.base_count() + static_cast<int>(mi);
        const auto &factors = vars.monos[mi];
        Bounds acc{1, 1};
        for (int v : factors) {
          auto it = b.find(v);
          acc = mul_bounds(acc, it == b.end() ? Bounds{} : it->second);
        }
        if (acc.lo_finite())
          tighten_lo(id, acc.lo);
        if (acc.hi_finite())
          tighten_hi(id, acc.hi);
        std::map<int, int> mult;
        for (int v : factors)
          ++mult[v];
        bool all_even = true;
        for (auto &[v, n] : mult)
          if (n % 2)
            all_even = false;
        if (all_even)
          tighten_lo(id, 0);
      }
    }
    return b;
  }

  // --- Fourier-Motzkin ----------------------------------------------------

  struct Layer {
    int id;
    std::vector<Poly> les; // atoms mentioning id at elimination time
  };

  // Gaussian elimination of equalities with a unit-coefficient variable that
  // does not occur inside any monomial.
  bool eliminate_equalities() {
    for (;;) {
      int pick = -1;
      int pick_var = 0;
      for (size_t i = 0; i < atoms.size() && pick < 0; ++i) {
        if (!atoms[i].is_eq || atoms[i].p.ground())
          continue;
        for (auto &[id, c] : atoms[i].p.c) {
          if (c != 1 && c != -1)
            continue;
          if (vars.is_mono(id))
            continue;
          bool in_mono = false;
          for (auto &m : vars.monos)
            if (std::find(m.begin(), m.end(), id) != m.end())
              in_mono = true;
          if (in_mono)
            continue;
          pick = static_cast<int>(i);
          pick_var = id;
          break;
        }
      }
      if (pick < 0)
        return true;
      // v = -(p - c*v)/c
      LinAtom eq = atoms[pick];
      int64_t c = eq.p.c.at(pick_var);
      Poly rhs; // value of v
      rhs.k = eq.p.k;
      for (auto &[id, cc] : eq.p.c)
        if (id != pick_var)
          rhs.add_entry(id, cc);
      Poly vval;
      vval.add(rhs, c == 1 ? -1 : 1); // v = -rhs when c=1, +rhs when c=-1
      atoms.erase(atoms.begin() + pick);
      for (auto &a : atoms) {
        auto it = a.p.c.find(pick_var);
        if (it == a.p.c.end())
          continue;
        int64_t coeff = it->second;
        a.p.c.erase(it);
        a.p.add(vval, coeff);
      }
      for (auto &a : atoms) {
        if (a.p.ground() && (a.is_eq ? a.p.k != 0 : a.p.k > 0))
          return false;
      }
    }
  }

  // Remaining equalities become two inequalities each.
  void split_equalities() {
    std::vector<LinAtom> out;
    for (auto &a : atoms) {
      if (!a.is_eq) {
        out.push_back(a);
        continue;
      }
      LinAtom le1{false, a.p};
      LinAtom le2;
      le2.is_eq = false;
      le2.p.add(a.p, -1);
      out.push_back(std::move(le1));
      out.push_back(std::move(le2));
    }
    atoms = std::move(out);
  }

  static void gcd_tighten(Poly &p) {
    int64_t g = 0;
    for (auto &[id, c] : p.c)
      g = std::gcd(g, c < 0 ? -c : c);
    if (g > 1) {
      for (auto &[id, c] : p.c)
        c /= g;
      p.k = -floor_div(-p.k, g); // sum <= -k  =>  sum/g <= floor(-k/g)
    }
  }

  // Returns false on contradiction; fills layers for model reconstruction.
  bool fourier_motzkin(std::vector<Layer> &layers) {
    std::vector<int> order; // monomials first, then base vars, descending id
    for (int id = vars.base_count() + static_cast<int>(vars.monos.size()) - 1; id >= 0; --id)
      order.push_back(id);

    std::vector<Poly> sys;
    for (auto &a : atoms)
      if (!a.p.ground())
        sys.push_back(a.p);
      else if (a.p.k > 0)
        return false;

    for (int v : order) {
      std::vector<Poly> with_v, rest;
      for (auto &p : sys)
        (p.c.count(v) ? with_v : rest).push_back(p);
      if (with_v.empty())
        continue;
      Layer layer;
      layer.id = v;
      layer.les = with_v;
      layers.push_back(layer);

      std::vector<Poly> pos, neg;
      for (auto &p : with_v)
        (p.c.at(v) > 0 ? pos : neg).push_back(p);
      for (auto &pp : pos)
        for (auto &pn : neg) {
          int64_t a = pp.c.at(v);       // a > 0
          int64_t b = -pn.c.at(v);      // b > 0
          Poly comb;
          comb.add(pp, b);
          comb.add(pn, a);
          comb.c.erase(v);
          gcd_tighten(comb);
          if (comb.ground()) {
            if (comb.k > 0)
              return false;
            continue;
          }
          rest.push_back(std::move(comb));
          if (rest.size() > 20000)
            throw OverflowBail{};
        }
      sys = std::move(rest);
    }
    for (auto &p : sys)
      if (p.ground() && p.k > 0)
        return false;
    return true;
  }

  // Assigns ids in reverse elimination order (base vars ascending, then
  // monomials); monomial values are forced to the product of their factors.
  bool reconstruct(const std::vector<Layer> &layers, std::map<int, int64_t> &out) {
    std::vector<Layer> rev(layers.rbegin(), layers.rend());
    for (auto &layer : rev) {
      int64_t lo = kInfNeg, hi = kInfPos;
      bool feasible = true;
      for (auto &p : layer.les) {
        int64_t c = p.c.at(layer.id);
        int64_t rhs = -p.k;
        bool ok = true;
        for (auto &[id, cc] : p.c) {
          if (id == layer.id)
            continue;
          auto it = out.find(id);
          if (it == out.end()) {
            ok = false; // mentions a variable with no assignment: skip bound
            break;
          }
          try {
            rhs = ck_add(rhs, -ck_mul(cc, it->second));
          } catch (OverflowBail &) {
            ok = false;
            break;
          }
        }
        if (!ok) {
          feasible = false;
          continue;
        }
        if (c > 0)
          hi = std::min(hi, floor_div(rhs, c));
        else
          lo = std::max(lo, ceil_div(rhs, c));
      }
      if (!feasible)
        return false;
      if (lo != kInfNeg && hi != kInfPos && lo > hi)
        return false;

      int64_t v;
      if (vars.is_mono(layer.id)) {
        int64_t prod = 1;
        for (int f : vars.mono_vars(layer.id)) {
          auto it = out.find(f);
          if (it == out.end())
            return false;
          try {
            prod = ck_mul(prod, it->second);
          } catch (OverflowBail &) {
            return false;
          }
        }
        if ((lo != kInfNeg && prod < lo) || (hi != kInfPos && prod > hi))
          return false;
        v = prod;
      } else {
        v = 0;
        if (lo != kInfNeg && v < lo)
          v = lo;
        if (hi != kInfPos && v > hi)
          v = hi;
      }
      out[layer.id] = v;
    }
    return true;
  }

  // Completes a partial assignment to all base vars (0 default, within
  // bounds if any), computes every monomial from its factors, and checks the
  // full original formula.
  bool finish_model(std::map<int, int64_t> assignment, const std::map<int, Bounds> &bounds,
                    Valuation &model) {
    for (int id = 0; id < vars.base_count(); ++id) {
      if (assignment.count(id))
        continue;
      int64_t v = 0;
      auto it = bounds.find(id);
      if (it != bounds.end()) {
        if (it->second.lo_finite() && v < it->second.lo)
          v = it->second.lo;
        if (it->second.hi_finite() && v > it->second.hi)
          v = it->second.hi;
      }
      assignment[id] = v;
    }
    Valuation m;
    for (int id = 0; id < vars.base_count(); ++id)
      m[vars.base[id]] = assignment[id];
    std::optional<bool> v = eval_formula(original, m);
    if (v && *v) {
      model = std::move(m);
      return true;
    }
    return false;
  }

  // Exhaustive search over the base variables of this cube within derived
  // (or clamped) bounds. Returns Unsat only when no bound was clamped.
  CubeResult enumerate(const std::map<int, Bounds> &bounds) {
    CubeResult res;
    std::vector<int> ids;
    std::set<int> used;
    for (auto &a : atoms)
      for (auto &[id, c] : a.p.c) {
        if (vars.is_mono(id)) {
          for (int f : vars.mono_vars(id))
            used.insert(f);
        } else {
          used.insert(id);
        }
      }
    // substituted-away vars get recovered after the search
    ids.assign(used.begin(), used.end());

    bool clamped = false;
    std::vector<std::pair<int64_t, int64_t>> rs;
    long double space = 1;
    for (int id : ids) {
      Bounds b;
      auto it = bounds.find(id);
      if (it != bounds.end())
        b = it->second;
      if (!b.lo_finite()) {
        b.lo = -lim.search_radius;
        clamped = true;
      }
      if (!b.hi_finite()) {
        b.hi = lim.search_radius;
        clamped = true;
      }
      if (b.lo > b.hi) {
        res.kind = CubeResult::Kind::Unsat;
        return res;
      }
      rs.push_back({b.lo, b.hi});
      space *= static_cast<long double>(b.hi - b.lo + 1);
    }
    if (space > static_cast<long double>(lim.enum_cap)) {
      res.kind = CubeResult::Kind::Unknown;
      res.reason = "bounded search space too large";
      return res;
    }

    std::vector<int64_t> cursor(ids.size());
    for (size_t i = 0; i < ids.size(); ++i)
      cursor[i] = rs[i].first;
    for (;;) {
      // evaluate the reduced linear system (cheap, products included)
      bool sat = true;
      for (auto &a : atoms) {
        int64_t sum = a.p.k;
        bool ok = true;
        for (auto &[id, c] : a.p.c) {
          int64_t v;
          if (vars.is_mono(id)) {
            v = 1;
            for (int f : vars.mono_vars(id)) {
              auto pos = std::find(ids.begin(), ids.end(), f);
              v *= cursor[pos - ids.begin()];
            }
          } else {
            auto pos = std::find(ids.begin(), ids.end(), id);
            v = cursor[pos - ids.begin()];
          }
          if (__builtin_add_overflow(sum, c * v, &sum)) {
            ok = false;
            break;
          }
        }
        if (!ok || (a.is_eq ? sum != 0 : sum > 0)) {
          sat = false;
          break;
        }
      }
      if (sat) {
        std::map<int, int64_t> assignment;
        for (size_t i = 0; i < ids.size(); ++i)
          assignment[ids[i]] = cursor[i];
        if (recover_substituted(assignment)) {
          Valuation model;
          if (finish_model(assignment, bounds, model)) {
            res.kind = CubeResult::Kind::Sat;
            res.model = std::move(model);
            return res;
          }
        }
      }
      size_t k = ids.size();
      bool done = ids.empty();
      while (k > 0) {
        --k;
        if (cursor[k] < rs[k].second) {
          ++cursor[k];
          for (size_t j = k + 1; j < ids.size(); ++j)
            cursor[j] = rs[j].first;
          break;
        }
        if (k == 0)
          done = true;
      }
      if (done)
        break;
    }
    if (ids.empty()) {
      // ground system already checked during propagation/FM; a ground cube
      // reaching here is satisfiable
      std::map<int, int64_t> assignment;
      if (recover_substituted(assignment)) {
        Valuation model;
        if (finish_model(assignment, bounds, model)) {
          res.kind = CubeResult::Kind::Sat;
          res.model = std::move(model);
          return res;
        }
      }
    }
    res.kind = clamped ? CubeResult::Kind::Unknown : CubeResult::Kind::Unsat;
    if (res.kind == CubeResult::Kind::Unknown)
      res.reason = "bounded model search exhausted (unresolved nonlinear atom)";
    return res;
  }

  // Propagated substitutions (v -> const, v -> w) are applied in reverse to
  // produce values for eliminated variables.
  bool recover_substituted(std::map<int, int64_t> &assignment) {
    for (int round = 0; round < 64; ++round) {
      bool changed = false;
      for (auto &[id, val] : subst) {
        if (assignment.count(id) || vars.is_mono(id))
          continue;
        if (val.ground()) {
          assignment[id] = val.k;
          changed = true;
          continue;
        }
        int tgt = val.c.begin()->first;
        int64_t c = val.c.begin()->second;
        int64_t base;
        if (vars.is_mono(tgt)) {
          bool ok = true;
          int64_t prod = 1;
          for (int f : vars.mono_vars(tgt)) {
            auto it = assignment.find(f);
            if (it == assignment.end()) {
              ok = false;
              break;
            }
            prod *= it->second;
          }
          if (!ok)
            continue;
          base = prod;
        } else {
          auto it = assignment.find(tgt);
          if (it == assignment.end())
            continue;
          base = it->second;
        }
        assignment[id] = c * base + val.k;
        changed = true;
      }
      if (!changed)
        break;
    }
    return true;
  }

  CubeResult solve() {
    CubeResult res;
    try {
      if (!build_atoms()) {
        res.kind = CubeResult::Kind::Unknown;
        res.reason = "internal literal normalization failure";
        return res;
      }
      if (!propagate()) {
        res.kind = CubeResult::Kind::Unsat;
        return res;
      }
      std::map<int, Bounds> bounds = derive_bounds();
      for (auto &[id, b] : bounds)
        if (b.empty()) {
          res.kind = CubeResult::Kind::Unsat;
          return res;
        }
      // add derived monomial bounds as linear facts for FM
      std::vector<LinAtom> extra;
      for (auto &[id, b] : bounds) {
        if (!vars.is_mono(id))
          continue;
        if (b.lo_finite()) {
          LinAtom a;
          a.p.add_entry(id, -1);
          a.p.k = b.lo;
          extra.push_back(a); // lo - id <= 0
        }
        if (b.hi_finite()) {
          LinAtom a;
          a.p.add_entry(id, 1);
          a.p.k = -b.hi;
          extra.push_back(a); // id - hi <= 0
        }
      }
      for (auto &a : extra)
        atoms.push_back(a);

      std::vector<LinAtom> saved = atoms;
      if (!eliminate_equalities()) {
        res.kind = CubeResult::Kind::Unsat;
        return res;
      }
      split_equalities();
      std::vector<Layer> layers;
      if (!fourier_motzkin(layers)) {
        res.kind = CubeResult::Kind::Unsat;
        return res;
      }
      std::map<int, int64_t> assignment;
      if (reconstruct(layers, assignment) && recover_substituted(assignment)) {
        Valuation model;
        if (finish_model(assignment, bounds, model)) {
          res.kind = CubeResult::Kind::Sat;
          res.model = std::move(model);
          return res;
        }
      }
      // nonlinear consistency got in the way; fall back to exact search
      atoms = std::move(saved);
      return enumerate(bounds);
    } catch (OverflowBail &) {
      res.kind = CubeResult::Kind::Unknown;
      res.reason = "coefficient overflow";
      return res;
    } catch (DegreeBail &) {
      res.kind = CubeResult::Kind::Unknown;
      res.reason = "nonlinear degree too high";
      return res;
    }
  }
};

} // namespace

SolverVerdict check_sat(FormulaRef f, const SolverLimits &lim) {
  SolverVerdict verdict;

  LocUse use = free_locations(f);
  std::set<StateVar> sv = state_vars_of(f);

  DnfBuilder dnf{lim.cube_cap};
  std::vector<Cube> cubes = dnf.build(f, false);
  if (dnf.overflowed) {
    verdict.kind = SolverVerdict::Kind::Unknown;
    verdict.reason = "formula too large (DNF cube cap exceeded)";
    return verdict;
  }

  if (lim.dump_cubes) {
    *lim.dump_cubes << "dnf: " << cubes.size() << " cube(s)\n";
    for (auto &c : cubes) {
      *lim.dump_cubes << " ";
      for (auto &l : c)
        *lim.dump_cubes << " " << (l.neg ? "!" : "") << render_formula(l.atom);
      *lim.dump_cubes << "\n";
    }
  }

  if (cubes.empty()) {
    verdict.kind = SolverVerdict::Kind::Unsat;
    return verdict;
  }

  bool any_unknown = false;
  std::string unknown_reason;
  for (auto &cube : cubes) {
    // trivially true cube: the whole formula is satisfiable; pick any model
    if (cube.empty()) {
      Valuation m;
      for (auto &v : sv)
        m[v] = 0;
      std::optional<bool> ok = eval_formula(f, m);
      if (ok && *ok) {
        verdict.kind = SolverVerdict::Kind::Sat;
        verdict.model = std::move(m);
        return verdict;
      }
      // valid-only cube but evaluation failed: keep searching
      any_unknown = true;
      unknown_reason = "model self-check failed on trivial cube";
      continue;
    }
    CubeSolver cs(lim, f, cube, sv);
    CubeResult r = cs.solve();
    switch (r.kind) {
    case CubeResult::Kind::Sat: {
      // model self-check is mandatory for every SAT verdict
      std::optional<bool> ok = eval_formula(f, r.model);
      assert(ok && *ok && "solver returned a model that does not satisfy the query");
      if (ok && *ok) {
        verdict.kind = SolverVerdict::Kind::Sat;
        verdict.model = std::move(r.model);
        return verdict;
      }
      any_unknown = true;
      unknown_reason = "model self-check failed";
      break;
    }
    case CubeResult::Kind::Unsat:
      break;
    case CubeResult::Kind::Unknown:
      any_unknown = true;
      if (unknown_reason.empty())
        unknown_reason = r.reason;
      break;
    }
  }
  if (any_unknown) {
    verdict.kind = SolverVerdict::Kind::Unknown;
    verdict.reason = unknown_reason;
  } else {
    verdict.kind = SolverVerdict::Kind::Unsat;
  }
  return verdict;
}

SolverVerdict check_valid(FormulaRef f, const SolverLimits &lim) { return check_sat(mk_not(f), lim); }

SolverVerdict entails(FormulaRef a, FormulaRef b, const SolverLimits &lim) {
  return check_valid(mk_implies(a, b), lim);
}

} // namespace microdeduct
