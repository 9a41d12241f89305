#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace microdeduct {

// A program location that can hold an integer value. Dereferenced
// reference parameters are locations in their own right (`*p`), owned
// by the function declaring `p`. Globals have an empty owner.
enum class LocKind : uint8_t { Global, Param, Local, DerefParam };

struct Location {
  LocKind kind = LocKind::Global;
  std::string name;
  std::string owner; // empty for globals

  auto operator<=>(const Location &) const = default;
};

std::string render_location(const Location &l);

class Term;
class Formula;
using TermRef = const Term *;
using FormulaRef = const Formula *;

// ---------------------------------------------------------------------------
// Terms: integer expressions over locations, with the two-state vocabulary
// used by ensures clauses (\old, \result) and fresh symbolic constants used
// internally by the analyses. Terms are hash-consed: structural equality is
// pointer equality.
// ---------------------------------------------------------------------------

enum class TermKind : uint8_t {
  IntConst,
  LocRef,    // current-state value of a location
  OldRef,    // pre-state value of a location (\old)
  ResultRef, // \result
  SymRef,    // fresh symbolic constant (havoc, skolem); never printed
  Negate,
  Add,
  Sub,
  Mul
};

class Term {
public:
  TermKind kind() const { return kind_; }
  int64_t value() const { return value_; }
  const Location &loc() const { return loc_; }
  const std::string &sym_name() const { return sym_name_; }
  uint32_t sym_id() const { return sym_id_; }
  TermRef lhs() const { return lhs_; }
  TermRef rhs() const { return rhs_; }

private:
  friend class TermArena;
  Term() = default;

  TermKind kind_ = TermKind::IntConst;
  int64_t value_ = 0;
  Location loc_;
  std::string sym_name_;
  uint32_t sym_id_ = 0;
  TermRef lhs_ = nullptr;
  TermRef rhs_ = nullptr;
};

TermRef mk_int(int64_t v);
TermRef mk_loc(const Location &l);
TermRef mk_old(const Location &l);
TermRef mk_result();
TermRef mk_sym(const std::string &name, uint32_t id);
TermRef mk_neg(TermRef t);
TermRef mk_add(TermRef a, TermRef b);
TermRef mk_sub(TermRef a, TermRef b);
TermRef mk_mul(TermRef a, TermRef b);

// Monotonically increasing ids for fresh symbolic constants.
uint32_t fresh_sym_id();
TermRef mk_fresh_sym(const std::string &hint);

// ---------------------------------------------------------------------------
// Formulas: quantifier-free boolean combinations of integer comparisons,
// plus \valid atoms over reference parameters. Hash-consed like terms.
// ---------------------------------------------------------------------------

enum class CmpOp : uint8_t { Eq, Ne, Lt, Le, Gt, Ge };

enum class FormulaKind : uint8_t { BoolConst, Compare, Valid, Not, And, Or, Implies };

class Formula {
public:
  FormulaKind kind() const { return kind_; }
  bool bool_value() const { return bval_; }
  CmpOp cmp_op() const { return op_; }
  TermRef cmp_lhs() const { return tl_; }
  TermRef cmp_rhs() const { return tr_; }
  const Location &valid_loc() const { return loc_; }
  FormulaRef lhs() const { return fl_; }
  FormulaRef rhs() const { return fr_; }

private:
  friend class FormulaArena;
  Formula() = default;

  FormulaKind kind_ = FormulaKind::BoolConst;
  bool bval_ = false;
  CmpOp op_ = CmpOp::Eq;
  TermRef tl_ = nullptr;
  TermRef tr_ = nullptr;
  Location loc_;
  FormulaRef fl_ = nullptr;
  FormulaRef fr_ = nullptr;
};

FormulaRef mk_bool(bool b);
FormulaRef mk_cmp(CmpOp op, TermRef a, TermRef b);
FormulaRef mk_valid(const Location &refparam);
FormulaRef mk_not(FormulaRef f);
FormulaRef mk_and(FormulaRef a, FormulaRef b);
FormulaRef mk_or(FormulaRef a, FormulaRef b);
FormulaRef mk_implies(FormulaRef a, FormulaRef b);

// Left-fold of a clause list; empty lists give the neutral element.
FormulaRef mk_and(const std::vector<FormulaRef> &fs);
FormulaRef mk_or(const std::vector<FormulaRef> &fs);

// Flattens nested And/Or nodes of the same kind into a conjunct/disjunct list.
std::vector<FormulaRef> conjuncts_of(FormulaRef f);
std::vector<FormulaRef> disjuncts_of(FormulaRef f);

// ---------------------------------------------------------------------------
// Valuations: assignments to the flattened two-state vocabulary.
// ---------------------------------------------------------------------------

struct StateVar {
  enum class Kind : uint8_t { Cur, Old, Result, Sym } kind = Kind::Cur;
  Location loc;        // Cur/Old
  std::string sym_name; // Sym
  uint32_t sym_id = 0;  // Sym

  auto operator<=>(const StateVar &) const = default;

  static StateVar cur(const Location &l) { return {Kind::Cur, l, "", 0}; }
  static StateVar old(const Location &l) { return {Kind::Old, l, "", 0}; }
  static StateVar result() { return {Kind::Result, {}, "", 0}; }
  static StateVar sym(const std::string &n, uint32_t id) { return {Kind::Sym, {}, n, id}; }
};

std::string render_state_var(const StateVar &v);

using Valuation = std::map<StateVar, int64_t>;

// Evaluation over mathematical integers (64-bit with overflow detection);
// returns nullopt on unbound variables or arithmetic overflow. \valid atoms
// evaluate to true: in MicroC every reference argument is an address of a
// live variable.
std::optional<int64_t> eval_term(TermRef t, const Valuation &v);
std::optional<bool> eval_formula(FormulaRef f, const Valuation &v);

// ---------------------------------------------------------------------------
// Structural operations.
// ---------------------------------------------------------------------------

// Simultaneous substitution of current-state location references; \old
// occurrences stay untouched.
TermRef substitute(TermRef t, const std::map<Location, TermRef> &map);
FormulaRef substitute(FormulaRef f, const std::map<Location, TermRef> &map);

// Substitution of the other vocabularies, used by inference and wp.
FormulaRef substitute_old(FormulaRef f, const std::map<Location, TermRef> &map);
FormulaRef substitute_result(FormulaRef f, TermRef t);
FormulaRef substitute_syms(FormulaRef f, const std::map<uint32_t, TermRef> &map);
FormulaRef old_to_plain(FormulaRef f);
FormulaRef plain_to_old(FormulaRef f);
TermRef plain_to_old(TermRef t);

// Two-state normal form of an ensures formula: current-state references to
// locations outside the footprint denote their pre-state value and are
// rewritten to \old; footprint locations keep their post-state reading.
// Value parameters are immutable and always read as \old.
FormulaRef normalize_ensures(FormulaRef f, const std::set<Location> &footprint);

// Equivalence-preserving cleanup: constant folding, unit/zero arithmetic,
// true/false absorption, duplicate conjunct removal. Idempotent.
TermRef simplify(TermRef t);
FormulaRef simplify(FormulaRef f);

struct LocUse {
  std::set<Location> plain;
  std::set<Location> old;
  bool uses_result = false;
  std::set<std::pair<std::string, uint32_t>> syms;
};

LocUse free_locations(FormulaRef f);
LocUse free_locations(TermRef t);

std::set<StateVar> state_vars_of(FormulaRef f);

// ---------------------------------------------------------------------------
// Rendering to the annotation concrete syntax. This is the single source of
// truth for annotation text; the frontend printer reuses it.
// ---------------------------------------------------------------------------

std::string render_term(TermRef t);
std::string render_formula(FormulaRef f);

} // namespace microdeduct
