#include "microdeduct/logic.hpp"

#include <atomic>
#include <cassert>
#include <deque>
#include <functional>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace microdeduct {

std::string render_location(const Location &l) {
  if (l.kind == LocKind::DerefParam)
    return "*" + l.name;
  return l.name;
}

// ---------------------------------------------------------------------------
// Interning arenas. Nodes are never freed; equality on refs is structural.
// ---------------------------------------------------------------------------

namespace {

inline void hash_combine(size_t &seed, size_t v) {
  seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
}

size_t hash_location(const Location &l) {
  size_t h = std::hash<std::string>{}(l.name);
  hash_combine(h, std::hash<std::string>{}(l.owner));
  hash_combine(h, static_cast<size_t>(l.kind));
  return h;
}

struct TermKey {
  TermKind kind;
  int64_t value;
  Location loc;
  std::string sym_name;
  uint32_t sym_id;
  TermRef lhs;
  TermRef rhs;

  bool operator==(const TermKey &o) const = default;
};

struct TermKeyHash {
  size_t operator()(const TermKey &k) const {
    size_t h = static_cast<size_t>(k.kind);
    hash_combine(h, std::hash<int64_t>{}(k.value));
    hash_combine(h, hash_location(k.loc));
    hash_combine(h, std::hash<std::string>{}(k.sym_name));
    hash_combine(h, k.sym_id);
    hash_combine(h, std::hash<const void *>{}(k.lhs));
    hash_combine(h, std::hash<const void *>{}(k.rhs));
    return h;
  }
};

struct FormulaKey {
  FormulaKind kind;
  bool bval;
  CmpOp op;
  TermRef tl;
  TermRef tr;
  Location loc;
  FormulaRef fl;
  FormulaRef fr;

  bool operator==(const FormulaKey &o) const = default;
};

struct FormulaKeyHash {
  size_t operator()(const FormulaKey &k) const {
    size_t h = static_cast<size_t>(k.kind);
    hash_combine(h, k.bval);
    hash_combine(h, static_cast<size_t>(k.op));
    hash_combine(h, std::hash<const void *>{}(k.tl));
    hash_combine(h, std::hash<const void *>{}(k.tr));
    hash_combine(h, hash_location(k.loc));
    hash_combine(h, std::hash<const void *>{}(k.fl));
    hash_combine(h, std::hash<const void *>{}(k.fr));
    return h;
  }
};

} // namespace

class TermArena {
public:
  static TermArena &instance() {
    static TermArena a;
    return a;
  }

  TermRef intern(TermKey k) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = table_.find(k);
    if (it != table_.end())
      return it->second;
    nodes_.push_back(Term());
    Term &t = nodes_.back();
    t.kind_ = k.kind;
    t.value_ = k.value;
    t.loc_ = k.loc;
    t.sym_name_ = k.sym_name;
    t.sym_id_ = k.sym_id;
    t.lhs_ = k.lhs;
    t.rhs_ = k.rhs;
    table_.emplace(std::move(k), &t);
    return &t;
  }

private:
  std::mutex mu_;
  std::deque<Term> nodes_;
  std::unordered_map<TermKey, TermRef, TermKeyHash> table_;
};

class FormulaArena {
public:
  static FormulaArena &instance() {
    static FormulaArena a;
    return a;
  }

  FormulaRef intern(FormulaKey k) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = table_.find(k);
    if (it != table_.end())
      return it->second;
    nodes_.push_back(Formula());
    Formula &f = nodes_.back();
    f.kind_ = k.kind;
    f.bval_ = k.bval;
    f.op_ = k.op;
    f.tl_ = k.tl;
    f.tr_ = k.tr;
    f.loc_ = k.loc;
    f.fl_ = k.fl;
    f.fr_ = k.fr;
    table_.emplace(std::move(k), &f);
    return &f;
  }

private:
  std::mutex mu_;
  std::deque<Formula> nodes_;
  std::unordered_map<FormulaKey, FormulaRef, FormulaKeyHash> table_;
};

TermRef mk_int(int64_t v) { return TermArena::instance().intern({TermKind::IntConst, v, {}, "", 0, nullptr, nullptr}); }
TermRef mk_loc(const Location &l) { return TermArena::instance().intern({TermKind::LocRef, 0, l, "", 0, nullptr, nullptr}); }
TermRef mk_old(const Location &l) { return TermArena::instance().intern({TermKind::OldRef, 0, l, "", 0, nullptr, nullptr}); }
TermRef mk_result() { return TermArena::instance().intern({TermKind::ResultRef, 0, {}, "", 0, nullptr, nullptr}); }
TermRef mk_sym(const std::string &name, uint32_t id) {
  return TermArena::instance().intern({TermKind::SymRef, 0, {}, name, id, nullptr, nullptr});
}
TermRef mk_neg(TermRef t) { return TermArena::instance().intern({TermKind::Negate, 0, {}, "", 0, t, nullptr}); }
TermRef mk_add(TermRef a, TermRef b) { return TermArena::instance().intern({TermKind::Add, 0, {}, "", 0, a, b}); }
TermRef mk_sub(TermRef a, TermRef b) { return TermArena::instance().intern({TermKind::Sub, 0, {}, "", 0, a, b}); }
TermRef mk_mul(TermRef a, TermRef b) { return TermArena::instance().intern({TermKind::Mul, 0, {}, "", 0, a, b}); }

uint32_t fresh_sym_id() {
  static std::atomic<uint32_t> next{1};
  return next.fetch_add(1);
}

TermRef mk_fresh_sym(const std::string &hint) { return mk_sym(hint, fresh_sym_id()); }

FormulaRef mk_bool(bool b) {
  return FormulaArena::instance().intern({FormulaKind::BoolConst, b, CmpOp::Eq, nullptr, nullptr, {}, nullptr, nullptr});
}
FormulaRef mk_cmp(CmpOp op, TermRef a, TermRef b) {
  return FormulaArena::instance().intern({FormulaKind::Compare, false, op, a, b, {}, nullptr, nullptr});
}
FormulaRef mk_valid(const Location &refparam) {
  return FormulaArena::instance().intern({FormulaKind::Valid, false, CmpOp::Eq, nullptr, nullptr, refparam, nullptr, nullptr});
}
FormulaRef mk_not(FormulaRef f) {
  return FormulaArena::instance().intern({FormulaKind::Not, false, CmpOp::Eq, nullptr, nullptr, {}, f, nullptr});
}
FormulaRef mk_and(FormulaRef a, FormulaRef b) {
  return FormulaArena::instance().intern({FormulaKind::And, false, CmpOp::Eq, nullptr, nullptr, {}, a, b});
}
FormulaRef mk_or(FormulaRef a, FormulaRef b) {
  return FormulaArena::instance().intern({FormulaKind::Or, false, CmpOp::Eq, nullptr, nullptr, {}, a, b});
}
FormulaRef mk_implies(FormulaRef a, FormulaRef b) {
  return FormulaArena::instance().intern({FormulaKind::Implies, false, CmpOp::Eq, nullptr, nullptr, {}, a, b});
}

FormulaRef mk_and(const std::vector<FormulaRef> &fs) {
  if (fs.empty())
    return mk_bool(true);
  FormulaRef acc = fs[0];
  for (size_t i = 1; i < fs.size(); ++i)
    acc = mk_and(acc, fs[i]);
  return acc;
}

FormulaRef mk_or(const std::vector<FormulaRef> &fs) {
  if (fs.empty())
    return mk_bool(false);
  FormulaRef acc = fs[0];
  for (size_t i = 1; i < fs.size(); ++i)
    acc = mk_or(acc, fs[i]);
  return acc;
}

static void collect_kind(FormulaRef f, FormulaKind k, std::vector<FormulaRef> &out) {
  if (f->kind() == k) {
    collect_kind(f->lhs(), k, out);
    collect_kind(f->rhs(), k, out);
  } else {
    out.push_back(f);
  }
}

std::vector<FormulaRef> conjuncts_of(FormulaRef f) {
  std::vector<FormulaRef> out;
  collect_kind(f, FormulaKind::And, out);
  return out;
}

std::vector<FormulaRef> disjuncts_of(FormulaRef f) {
  std::vector<FormulaRef> out;
  collect_kind(f, FormulaKind::Or, out);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation.
// ---------------------------------------------------------------------------

namespace {

bool add_ck(int64_t a, int64_t b, int64_t &out) { return !__builtin_add_overflow(a, b, &out); }
bool sub_ck(int64_t a, int64_t b, int64_t &out) { return !__builtin_sub_overflow(a, b, &out); }
bool mul_ck(int64_t a, int64_t b, int64_t &out) { return !__builtin_mul_overflow(a, b, &out); }

} // namespace

std::optional<int64_t> eval_term(TermRef t, const Valuation &v) {
  switch (t->kind()) {
  case TermKind::IntConst:
    return t->value();
  case TermKind::LocRef: {
    auto it = v.find(StateVar::cur(t->loc()));
    if (it == v.end())
      return std::nullopt;
    return it->second;
  }
  case TermKind::OldRef: {
    auto it = v.find(StateVar::old(t->loc()));
    if (it == v.end())
      return std::nullopt;
    return it->second;
  }
  case TermKind::ResultRef: {
    auto it = v.find(StateVar::result());
    if (it == v.end())
      return std::nullopt;
    return it->second;
  }
  case TermKind::SymRef: {
    auto it = v.find(StateVar::sym(t->sym_name(), t->sym_id()));
    if (it == v.end())
      return std::nullopt;
    return it->second;
  }
  case TermKind::Negate: {
    auto a = eval_term(t->lhs(), v);
    if (!a)
      return std::nullopt;
    int64_t r;
    if (!sub_ck(0, *a, r))
      return std::nullopt;
    return r;
  }
  case TermKind::Add:
  case TermKind::Sub:
  case TermKind::Mul: {
    auto a = eval_term(t->lhs(), v);
    auto b = eval_term(t->rhs(), v);
    if (!a || !b)
      return std::nullopt;
    int64_t r;
    bool ok = t->kind() == TermKind::Add   ? add_ck(*a, *b, r)
              : t->kind() == TermKind::Sub ? sub_ck(*a, *b, r)
                                           : mul_ck(*a, *b, r);
    if (!ok)
      return std::nullopt;
    return r;
  }
  }
  return std::nullopt;
}

std::optional<bool> eval_formula(FormulaRef f, const Valuation &v) {
  switch (f->kind()) {
  case FormulaKind::BoolConst:
    return f->bool_value();
  case FormulaKind::Compare: {
    auto a = eval_term(f->cmp_lhs(), v);
    auto b = eval_term(f->cmp_rhs(), v);
    if (!a || !b)
      return std::nullopt;
    switch (f->cmp_op()) {
    case CmpOp::Eq:
      return *a == *b;
    case CmpOp::Ne:
      return *a != *b;
    case CmpOp::Lt:
      return *a < *b;
    case CmpOp::Le:
      return *a <= *b;
    case CmpOp::Gt:
      return *a > *b;
    case CmpOp::Ge:
      return *a >= *b;
    }
    return std::nullopt;
  }
  case FormulaKind::Valid:
    return true;
  case FormulaKind::Not: {
    auto a = eval_formula(f->lhs(), v);
    if (!a)
      return std::nullopt;
    return !*a;
  }
  case FormulaKind::And: {
    auto a = eval_formula(f->lhs(), v);
    auto b = eval_formula(f->rhs(), v);
    if (!a || !b)
      return std::nullopt;
    return *a && *b;
  }
  case FormulaKind::Or: {
    auto a = eval_formula(f->lhs(), v);
    auto b = eval_formula(f->rhs(), v);
    if (!a || !b)
      return std::nullopt;
    return *a || *b;
  }
  case FormulaKind::Implies: {
    auto a = eval_formula(f->lhs(), v);
    auto b = eval_formula(f->rhs(), v);
    if (!a || !b)
      return std::nullopt;
    return !*a || *b;
  }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Generic bottom-up rewriting with memoization (trees are shared DAGs).
// ---------------------------------------------------------------------------

namespace {

using TermRewrite = std::function<TermRef(TermRef)>; // applied to leaves only

class Rewriter {
public:
  explicit Rewriter(TermRewrite leaf) : leaf_(std::move(leaf)) {}

  TermRef term(TermRef t) {
    auto it = tmemo_.find(t);
    if (it != tmemo_.end())
      return it->second;
    TermRef r;
    switch (t->kind()) {
    case TermKind::IntConst:
    case TermKind::LocRef:
    case TermKind::OldRef:
    case TermKind::ResultRef:
    case TermKind::SymRef:
      r = leaf_(t);
      break;
    case TermKind::Negate:
      r = mk_neg(term(t->lhs()));
      break;
    case TermKind::Add:
      r = mk_add(term(t->lhs()), term(t->rhs()));
      break;
    case TermKind::Sub:
      r = mk_sub(term(t->lhs()), term(t->rhs()));
      break;
    case TermKind::Mul:
      r = mk_mul(term(t->lhs()), term(t->rhs()));
      break;
    }
    tmemo_.emplace(t, r);
    return r;
  }

  FormulaRef formula(FormulaRef f) {
    auto it = fmemo_.find(f);
    if (it != fmemo_.end())
      return it->second;
    FormulaRef r;
    switch (f->kind()) {
    case FormulaKind::BoolConst:
    case FormulaKind::Valid:
      r = f;
      break;
    case FormulaKind::Compare:
      r = mk_cmp(f->cmp_op(), term(f->cmp_lhs()), term(f->cmp_rhs()));
      break;
    case FormulaKind::Not:
      r = mk_not(formula(f->lhs()));
      break;
    case FormulaKind::And:
      r = mk_and(formula(f->lhs()), formula(f->rhs()));
      break;
    case FormulaKind::Or:
      r = mk_or(formula(f->lhs()), formula(f->rhs()));
      break;
    case FormulaKind::Implies:
      r = mk_implies(formula(f->lhs()), formula(f->rhs()));
      break;
    }
    fmemo_.emplace(f, r);
    return r;
  }

private:
  TermRewrite leaf_;
  std::unordered_map<TermRef, TermRef> tmemo_;
  std::unordered_map<FormulaRef, FormulaRef> fmemo_;
};

} // namespace

TermRef substitute(TermRef t, const std::map<Location, TermRef> &map) {
  Rewriter rw([&](TermRef leaf) -> TermRef {
    if (leaf->kind() == TermKind::LocRef) {
      auto it = map.find(leaf->loc());
      if (it != map.end())
        return it->second;
    }
    return leaf;
  });
  return rw.term(t);
}

FormulaRef substitute(FormulaRef f, const std::map<Location, TermRef> &map) {
  Rewriter rw([&](TermRef leaf) -> TermRef {
    if (leaf->kind() == TermKind::LocRef) {
      auto it = map.find(leaf->loc());
      if (it != map.end())
        return it->second;
    }
    return leaf;
  });
  return rw.formula(f);
}

FormulaRef substitute_old(FormulaRef f, const std::map<Location, TermRef> &map) {
  Rewriter rw([&](TermRef leaf) -> TermRef {
    if (leaf->kind() == TermKind::OldRef) {
      auto it = map.find(leaf->loc());
      if (it != map.end())
        return it->second;
    }
    return leaf;
  });
  return rw.formula(f);
}

FormulaRef substitute_result(FormulaRef f, TermRef t) {
  Rewriter rw([&](TermRef leaf) -> TermRef {
    if (leaf->kind() == TermKind::ResultRef)
      return t;
    return leaf;
  });
  return rw.formula(f);
}

FormulaRef substitute_syms(FormulaRef f, const std::map<uint32_t, TermRef> &map) {
  Rewriter rw([&](TermRef leaf) -> TermRef {
    if (leaf->kind() == TermKind::SymRef) {
      auto it = map.find(leaf->sym_id());
      if (it != map.end())
        return it->second;
    }
    return leaf;
  });
  return rw.formula(f);
}

FormulaRef old_to_plain(FormulaRef f) {
  Rewriter rw([&](TermRef leaf) -> TermRef {
    if (leaf->kind() == TermKind::OldRef)
      return mk_loc(leaf->loc());
    return leaf;
  });
  return rw.formula(f);
}

FormulaRef plain_to_old(FormulaRef f) {
  Rewriter rw([&](TermRef leaf) -> TermRef {
    if (leaf->kind() == TermKind::LocRef)
      return mk_old(leaf->loc());
    return leaf;
  });
  return rw.formula(f);
}

TermRef plain_to_old(TermRef t) {
  Rewriter rw([&](TermRef leaf) -> TermRef {
    if (leaf->kind() == TermKind::LocRef)
      return mk_old(leaf->loc());
    return leaf;
  });
  return rw.term(t);
}

FormulaRef normalize_ensures(FormulaRef f, const std::set<Location> &footprint) {
  Rewriter rw([&](TermRef leaf) -> TermRef {
    if (leaf->kind() == TermKind::LocRef) {
      const Location &l = leaf->loc();
      if (l.kind == LocKind::Param || !footprint.count(l))
        return mk_old(l);
    }
    return leaf;
  });
  return rw.formula(f);
}

// ---------------------------------------------------------------------------
// Simplification.
// ---------------------------------------------------------------------------

namespace {

std::optional<int64_t> const_of(TermRef t) {
  if (t->kind() == TermKind::IntConst)
    return t->value();
  return std::nullopt;
}

TermRef simplify_term_rec(TermRef t, std::unordered_map<TermRef, TermRef> &memo) {
  auto it = memo.find(t);
  if (it != memo.end())
    return it->second;
  TermRef r = t;
  switch (t->kind()) {
  case TermKind::IntConst:
  case TermKind::LocRef:
  case TermKind::OldRef:
  case TermKind::ResultRef:
  case TermKind::SymRef:
    break;
  case TermKind::Negate: {
    TermRef a = simplify_term_rec(t->lhs(), memo);
    if (auto c = const_of(a)) {
      int64_t out;
      if (sub_ck(0, *c, out)) {
        r = mk_int(out);
        break;
      }
    }
    if (a->kind() == TermKind::Negate) {
      r = a->lhs();
      break;
    }
    r = mk_neg(a);
    break;
  }
  case TermKind::Add: {
    TermRef a = simplify_term_rec(t->lhs(), memo);
    TermRef b = simplify_term_rec(t->rhs(), memo);
    auto ca = const_of(a), cb = const_of(b);
    int64_t out;
    if (ca && cb && add_ck(*ca, *cb, out)) {
      r = mk_int(out);
      break;
    }
    if (ca && *ca == 0) {
      r = b;
      break;
    }
    if (cb && *cb == 0) {
      r = a;
      break;
    }
    r = mk_add(a, b);
    break;
  }
  case TermKind::Sub: {
    TermRef a = simplify_term_rec(t->lhs(), memo);
    TermRef b = simplify_term_rec(t->rhs(), memo);
    auto ca = const_of(a), cb = const_of(b);
    int64_t out;
    if (ca && cb && sub_ck(*ca, *cb, out)) {
      r = mk_int(out);
      break;
    }
    if (cb && *cb == 0) {
      r = a;
      break;
    }
    if (a == b) {
      r = mk_int(0);
      break;
    }
    r = mk_sub(a, b);
    break;
  }
  case TermKind::Mul: {
    TermRef a = simplify_term_rec(t->lhs(), memo);
    TermRef b = simplify_term_rec(t->rhs(), memo);
    auto ca = const_of(a), cb = const_of(b);
    int64_t out;
    if (ca && cb && mul_ck(*ca, *cb, out)) {
      r = mk_int(out);
      break;
    }
    if ((ca && *ca == 0) || (cb && *cb == 0)) {
      r = mk_int(0);
      break;
    }
    if (ca && *ca == 1) {
      r = b;
      break;
    }
    if (cb && *cb == 1) {
      r = a;
      break;
    }
    r = mk_mul(a, b);
    break;
  }
  }
  memo.emplace(t, r);
  return r;
}

std::optional<bool> const_cmp(CmpOp op, int64_t a, int64_t b) {
  switch (op) {
  case CmpOp::Eq:
    return a == b;
  case CmpOp::Ne:
    return a != b;
  case CmpOp::Lt:
    return a < b;
  case CmpOp::Le:
    return a <= b;
  case CmpOp::Gt:
    return a > b;
  case CmpOp::Ge:
    return a >= b;
  }
  return std::nullopt;
}

FormulaRef simplify_rec(FormulaRef f, std::unordered_map<FormulaRef, FormulaRef> &fmemo,
                        std::unordered_map<TermRef, TermRef> &tmemo) {
  auto it = fmemo.find(f);
  if (it != fmemo.end())
    return it->second;
  FormulaRef r = f;
  switch (f->kind()) {
  case FormulaKind::BoolConst:
  case FormulaKind::Valid:
    break;
  case FormulaKind::Compare: {
    TermRef a = simplify_term_rec(f->cmp_lhs(), tmemo);
    TermRef b = simplify_term_rec(f->cmp_rhs(), tmemo);
    auto ca = const_of(a), cb = const_of(b);
    if (ca && cb) {
      if (auto v = const_cmp(f->cmp_op(), *ca, *cb)) {
        r = mk_bool(*v);
        break;
      }
    }
    if (a == b) {
      bool holds = f->cmp_op() == CmpOp::Eq || f->cmp_op() == CmpOp::Le || f->cmp_op() == CmpOp::Ge;
      r = mk_bool(holds);
      break;
    }
    r = mk_cmp(f->cmp_op(), a, b);
    break;
  }
  case FormulaKind::Not: {
    FormulaRef a = simplify_rec(f->lhs(), fmemo, tmemo);
    if (a->kind() == FormulaKind::BoolConst) {
      r = mk_bool(!a->bool_value());
      break;
    }
    if (a->kind() == FormulaKind::Not) {
      r = a->lhs();
      break;
    }
    r = mk_not(a);
    break;
  }
  case FormulaKind::And: {
    std::vector<FormulaRef> keep;
    bool contradiction = false;
    for (FormulaRef c : conjuncts_of(f)) {
      FormulaRef s = simplify_rec(c, fmemo, tmemo);
      // a child may simplify into a conjunction itself; keep the list flat
      for (FormulaRef sc : conjuncts_of(s)) {
        if (sc->kind() == FormulaKind::BoolConst) {
          if (!sc->bool_value()) {
            contradiction = true;
            break;
          }
          continue;
        }
        bool dup = false;
        for (FormulaRef k : keep)
          if (k == sc) {
            dup = true;
            break;
          }
        if (!dup)
          keep.push_back(sc);
      }
      if (contradiction)
        break;
    }
    r = contradiction ? mk_bool(false) : mk_and(keep);
    break;
  }
  case FormulaKind::Or: {
    std::vector<FormulaRef> keep;
    bool tautology = false;
    for (FormulaRef d : disjuncts_of(f)) {
      FormulaRef s = simplify_rec(d, fmemo, tmemo);
      for (FormulaRef sd : disjuncts_of(s)) {
        if (sd->kind() == FormulaKind::BoolConst) {
          if (sd->bool_value()) {
            tautology = true;
            break;
          }
          continue;
        }
        bool dup = false;
        for (FormulaRef k : keep)
          if (k == sd) {
            dup = true;
            break;
          }
        if (!dup)
          keep.push_back(sd);
      }
      if (tautology)
        break;
    }
    r = tautology ? mk_bool(true) : mk_or(keep);
    break;
  }
  case FormulaKind::Implies: {
    FormulaRef a = simplify_rec(f->lhs(), fmemo, tmemo);
    FormulaRef b = simplify_rec(f->rhs(), fmemo, tmemo);
    if (a->kind() == FormulaKind::BoolConst) {
      r = a->bool_value() ? b : mk_bool(true);
      break;
    }
    if (b->kind() == FormulaKind::BoolConst && b->bool_value()) {
      r = mk_bool(true);
      break;
    }
    if (a == b) {
      r = mk_bool(true);
      break;
    }
    r = mk_implies(a, b);
    break;
  }
  }
  fmemo.emplace(f, r);
  return r;
}

} // namespace

TermRef simplify(TermRef t) {
  std::unordered_map<TermRef, TermRef> memo;
  return simplify_term_rec(t, memo);
}

FormulaRef simplify(FormulaRef f) {
  std::unordered_map<FormulaRef, FormulaRef> fmemo;
  std::unordered_map<TermRef, TermRef> tmemo;
  return simplify_rec(f, fmemo, tmemo);
}

// ---------------------------------------------------------------------------
// Free locations / state variables.
// ---------------------------------------------------------------------------

namespace {

void collect_term(TermRef t, LocUse &out) {
  switch (t->kind()) {
  case TermKind::IntConst:
    break;
  case TermKind::LocRef:
    out.plain.insert(t->loc());
    break;
  case TermKind::OldRef:
    out.old.insert(t->loc());
    break;
  case TermKind::ResultRef:
    out.uses_result = true;
    break;
  case TermKind::SymRef:
    out.syms.emplace(t->sym_name(), t->sym_id());
    break;
  case TermKind::Negate:
    collect_term(t->lhs(), out);
    break;
  case TermKind::Add:
  case TermKind::Sub:
  case TermKind::Mul:
    collect_term(t->lhs(), out);
    collect_term(t->rhs(), out);
    break;
  }
}

void collect_formula(FormulaRef f, LocUse &out) {
  switch (f->kind()) {
  case FormulaKind::BoolConst:
    break;
  case FormulaKind::Compare:
    collect_term(f->cmp_lhs(), out);
    collect_term(f->cmp_rhs(), out);
    break;
  case FormulaKind::Valid:
    out.plain.insert(f->valid_loc());
    break;
  case FormulaKind::Not:
    collect_formula(f->lhs(), out);
    break;
  case FormulaKind::And:
  case FormulaKind::Or:
  case FormulaKind::Implies:
    collect_formula(f->lhs(), out);
    collect_formula(f->rhs(), out);
    break;
  }
}

} // namespace

LocUse free_locations(FormulaRef f) {
  LocUse u;
  collect_formula(f, u);
  return u;
}

LocUse free_locations(TermRef t) {
  LocUse u;
  collect_term(t, u);
  return u;
}

std::set<StateVar> state_vars_of(FormulaRef f) {
  LocUse u = free_locations(f);
  std::set<StateVar> vars;
  for (auto &l : u.plain)
    vars.insert(StateVar::cur(l));
  for (auto &l : u.old)
    vars.insert(StateVar::old(l));
  if (u.uses_result)
    vars.insert(StateVar::result());
  for (auto &[name, id] : u.syms)
    vars.insert(StateVar::sym(name, id));
  return vars;
}

std::string render_state_var(const StateVar &v) {
  switch (v.kind) {
  case StateVar::Kind::Cur:
    return render_location(v.loc);
  case StateVar::Kind::Old:
    return "\\old(" + render_location(v.loc) + ")";
  case StateVar::Kind::Result:
    return "\\result";
  case StateVar::Kind::Sym:
    return v.sym_name + "#" + std::to_string(v.sym_id);
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Rendering. Precedence, loosest first: ==>  ||  &&  !  cmp  + -  *  unary.
// ---------------------------------------------------------------------------

namespace {

// Term precedence levels: 0 additive, 1 multiplicative, 2 unary/primary.
void render_term_rec(TermRef t, int min_level, std::string &out) {
  switch (t->kind()) {
  case TermKind::IntConst:
    if (t->value() < 0) {
      bool paren = min_level > 1;
      if (paren)
        out += "(";
      out += std::to_string(t->value());
      if (paren)
        out += ")";
    } else {
      out += std::to_string(t->value());
    }
    break;
  case TermKind::LocRef:
    out += render_location(t->loc());
    break;
  case TermKind::OldRef:
    out += "\\old(" + render_location(t->loc()) + ")";
    break;
  case TermKind::ResultRef:
    out += "\\result";
    break;
  case TermKind::SymRef:
    // Internal only; surfaces in debug output, never in emitted source.
    out += t->sym_name() + "#" + std::to_string(t->sym_id());
    break;
  case TermKind::Negate: {
    bool paren = min_level > 1;
    if (paren)
      out += "(";
    out += "-";
    render_term_rec(t->lhs(), 2, out);
    if (paren)
      out += ")";
    break;
  }
  case TermKind::Add:
  case TermKind::Sub: {
    bool paren = min_level > 0;
    if (paren)
      out += "(";
    render_term_rec(t->lhs(), 0, out);
    out += t->kind() == TermKind::Add ? " + " : " - ";
    render_term_rec(t->rhs(), 1, out); // left-assoc: rhs binds tighter
    if (paren)
      out += ")";
    break;
  }
  case TermKind::Mul: {
    bool paren = min_level > 1;
    if (paren)
      out += "(";
    render_term_rec(t->lhs(), 1, out);
    out += " * ";
    render_term_rec(t->rhs(), 2, out);
    if (paren)
      out += ")";
    break;
  }
  }
}

const char *cmp_str(CmpOp op) {
  switch (op) {
  case CmpOp::Eq:
    return "==";
  case CmpOp::Ne:
    return "!=";
  case CmpOp::Lt:
    return "<";
  case CmpOp::Le:
    return "<=";
  case CmpOp::Gt:
    return ">";
  case CmpOp::Ge:
    return ">=";
  }
  return "?";
}

// Formula precedence levels: 0 ==>, 1 ||, 2 &&, 3 atoms/negation.
void render_formula_rec(FormulaRef f, int min_level, std::string &out) {
  switch (f->kind()) {
  case FormulaKind::BoolConst:
    out += f->bool_value() ? "\\true" : "\\false";
    break;
  case FormulaKind::Compare: {
    std::string l, r;
    render_term_rec(f->cmp_lhs(), 0, l);
    render_term_rec(f->cmp_rhs(), 0, r);
    out += l + " " + cmp_str(f->cmp_op()) + " " + r;
    break;
  }
  case FormulaKind::Valid:
    out += "\\valid(" + f->valid_loc().name + ")";
    break;
  case FormulaKind::Not:
    out += "!";
    if (f->lhs()->kind() == FormulaKind::Valid || f->lhs()->kind() == FormulaKind::BoolConst) {
      render_formula_rec(f->lhs(), 3, out);
    } else {
      out += "(";
      render_formula_rec(f->lhs(), 0, out);
      out += ")";
    }
    break;
  case FormulaKind::And: {
    bool paren = min_level > 2;
    if (paren)
      out += "(";
    render_formula_rec(f->lhs(), 2, out);
    out += " && ";
    render_formula_rec(f->rhs(), 3, out);
    if (paren)
      out += ")";
    break;
  }
  case FormulaKind::Or: {
    bool paren = min_level > 1;
    if (paren)
      out += "(";
    render_formula_rec(f->lhs(), 1, out);
    out += " || ";
    render_formula_rec(f->rhs(), 2, out);
    if (paren)
      out += ")";
    break;
  }
  case FormulaKind::Implies: {
    bool paren = min_level > 0;
    if (paren)
      out += "(";
    render_formula_rec(f->lhs(), 1, out); // right-assoc
    out += " ==> ";
    render_formula_rec(f->rhs(), 0, out);
    if (paren)
      out += ")";
    break;
  }
  }
}

} // namespace

std::string render_term(TermRef t) {
  std::string s;
  render_term_rec(t, 0, s);
  return s;
}

std::string render_formula(FormulaRef f) {
  std::string s;
  render_formula_rec(f, 0, s);
  return s;
}

} // namespace microdeduct
