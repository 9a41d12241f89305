#pragma once

#include <iosfwd>

#include "microdeduct/logic.hpp"

namespace microdeduct {

struct SolverLimits {
  int cube_cap = 4096;          // DNF size cap
  long enum_cap = 1000000;      // per-cube exhaustive enumeration budget
  int64_t search_radius = 64;   // bounded model search range for unbounded vars
  std::ostream *dump_cubes = nullptr;
};

struct SolverVerdict {
  enum class Kind { Sat, Unsat, Unknown } kind = Kind::Unknown;
  Valuation model;    // Sat: a verified model (a countermodel for check_valid)
  std::string reason; // Unknown

  bool sat() const { return kind == Kind::Sat; }
  bool unsat() const { return kind == Kind::Unsat; }
  bool unknown() const { return kind == Kind::Unknown; }
  bool valid() const { return unsat(); } // for check_valid/entails results
};

// Satisfiability over the integers. Decision procedure: negation normal
// form, DNF with a size cap, per-cube equality propagation and congruence
// closure over product monomials, Fourier-Motzkin elimination with integer
// tightening, model reconstruction, and a bounded exhaustive search as the
// last resort. SAT answers always carry a model that re-evaluates to true.
SolverVerdict check_sat(FormulaRef f, const SolverLimits &lim = {});

// Validity via unsatisfiability of the negation; SAT means countermodel.
SolverVerdict check_valid(FormulaRef f, const SolverLimits &lim = {});

// check_valid(a ==> b).
SolverVerdict entails(FormulaRef a, FormulaRef b, const SolverLimits &lim = {});

} // namespace microdeduct
