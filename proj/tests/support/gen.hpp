#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "microdeduct/logic.hpp"

namespace microdeduct::testgen {

struct Rng {
  std::mt19937 eng;
  explicit Rng(uint32_t seed) : eng(seed) {}

  int range(int lo, int hi) { // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(eng);
  }
  bool chance(int pct) { return range(1, 100) <= pct; }

  template <typename T> const T &pick(const std::vector<T> &v) { return v[range(0, static_cast<int>(v.size()) - 1)]; }
};

// Random terms/formulas over the given variables. Products multiply at most
// two variables (leaf * leaf).
TermRef random_term(Rng &rng, const std::vector<StateVar> &vars, int depth, bool allow_product);
FormulaRef random_formula(Rng &rng, const std::vector<StateVar> &vars, int depth, bool allow_product);

struct ProgramGenOptions {
  int max_helpers = 3;
  int min_helpers = 1;
  int globals = 2;
  int64_t domain = 8;        // entry requires bounds every global to [-domain, domain]
  int trivial_ensures_pct = 40; // chance the entry ensures is \true
  bool allow_ref_params = true;
  bool emit_entry_assigns = true;
};

// A loop-free MicroC program with a contracted entry and bare helpers.
// Arithmetic magnitudes are tracked so no run within the entry requires can
// overflow 32-bit arithmetic.
std::string random_program(Rng &rng, const ProgramGenOptions &opts = {});

// A random loop-free statement block over the given global names, rendered
// as MicroC source for a module of the form:
//   int a; ... void subject() { <block> }
// Magnitudes stay below overflow for inputs within [-domain, domain].
std::string random_statements(Rng &rng, const std::vector<std::string> &globals, int64_t domain,
                              int depth = 2);

std::string wrap_subject(const std::vector<std::string> &globals, const std::string &body);

} // namespace microdeduct::testgen
