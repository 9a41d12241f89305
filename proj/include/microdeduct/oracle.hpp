#pragma once

#include <functional>

#include "microdeduct/ast.hpp"

namespace microdeduct {

// Concrete store: globals plus, during checks, the synthetic cells that
// reference parameters point at.
struct Env {
  std::map<Location, int64_t> values;
};

struct ExecLimits {
  long step_budget = 100000; // per call tree
};

struct RunOutcome {
  enum class Kind { Ok, Fault, Budget } kind = Kind::Ok;
  enum class FaultKind { Overflow, InvalidDeref } fault = FaultKind::Overflow;
  Env env; // final state (meaningful for Ok)
  std::optional<int64_t> ret;
  SourceSpan fault_span;
};

// Argument to exec_function: a concrete value or a reference to a location
// that must exist in the environment.
struct CallValue {
  bool by_ref = false;
  int64_t value = 0;
  Location target;

  static CallValue of(int64_t v) { return {false, v, {}}; }
  static CallValue ref(const Location &l) { return {true, 0, l}; }
};

// Invoked before each executed statement with the current store.
using PointObserver = std::function<void(int point, const Env &)>;

// Deterministic big-step execution; all arithmetic is checked against
// [-2^31, 2^31-1]. Budget exhaustion is reported as its own outcome so
// divergence is never mistaken for a contract violation.
RunOutcome exec_function(const ModuleAst &m, const std::string &fn, const Env &env,
                         const std::vector<CallValue> &args, const ExecLimits &lim = {},
                         const PointObserver &obs = {});

struct DomainBounds {
  std::map<Location, std::pair<int64_t, int64_t>> ranges;
};

// Bounds every global, value parameter and dereferenced reference parameter
// of fn to [lo, hi].
DomainBounds uniform_bounds(const ModuleAst &m, const std::string &fn, int64_t lo, int64_t hi);

struct OracleOptions {
  long enumeration_cap = 1000000; // max product of domain sizes
  ExecLimits exec;
  PointObserver observer;
};

struct ContractCheck {
  enum class Kind { Holds, Counterexample, Budget, Refused } kind = Kind::Holds;
  Env counterexample; // pre-state of the first violating case
  std::string detail;
  long cases = 0; // requires-satisfying cases enumerated
};

// Enumerates every environment within bounds that satisfies the requires
// clauses (lexicographic by location name, ascending values) and reports the
// first case whose run faults, violates ensures, or writes outside assigns.
ContractCheck check_contract(const ModuleAst &m, const std::string &fn, const Contract &c,
                             const DomainBounds &bounds, const OracleOptions &opts = {});

struct VarBounds {
  std::map<StateVar, std::pair<int64_t, int64_t>> ranges;
};

struct FormulaCheck {
  bool refused = false;
  std::string refusal_reason;
  bool holds_for_all = false;
  std::optional<Valuation> counterexample; // first falsifying valuation
  std::optional<Valuation> witness;        // first satisfying valuation
};

// Exhaustive evaluation over the bounded domain; reports both the first
// witness and the first counterexample in enumeration order.
FormulaCheck check_formula(FormulaRef f, const VarBounds &bounds, long cap = 1000000);
FormulaCheck check_formula(FormulaRef f, int64_t lo, int64_t hi, long cap = 1000000);

} // namespace microdeduct
