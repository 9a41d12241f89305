#include "doctest.h"

#include "microdeduct/oracle.hpp"
#include "microdeduct/solver.hpp"
#include "support/gen.hpp"

using namespace microdeduct;

namespace {

Location glob(const std::string &n) { return {LocKind::Global, n, ""}; }

FormulaRef with_domain(FormulaRef f, const std::vector<StateVar> &vars, int64_t d) {
  FormulaRef out = f;
  for (auto &v : vars) {
    TermRef t = v.kind == StateVar::Kind::Cur   ? mk_loc(v.loc)
                : v.kind == StateVar::Kind::Old ? mk_old(v.loc)
                                                : mk_result();
    out = mk_and(out, mk_and(mk_cmp(CmpOp::Ge, t, mk_int(-d)), mk_cmp(CmpOp::Le, t, mk_int(d))));
  }
  return out;
}

} // namespace

TEST_CASE("bounded conjunction is satisfiable with the forced model") {
  Location x = glob("x");
  FormulaRef f = mk_and(mk_and(mk_cmp(CmpOp::Ge, mk_loc(x), mk_int(0)),
                               mk_cmp(CmpOp::Le, mk_loc(x), mk_int(10))),
                        mk_cmp(CmpOp::Eq, mk_loc(x), mk_int(7)));
  SolverVerdict v = check_sat(f);
  REQUIRE(v.sat());
  CHECK(v.model.at(StateVar::cur(x)) == 7);
}

TEST_CASE("integer tightening: no integer strictly between 0 and 1") {
  Location x = glob("x");
  FormulaRef f = mk_and(mk_cmp(CmpOp::Gt, mk_loc(x), mk_int(0)),
                        mk_cmp(CmpOp::Lt, mk_loc(x), mk_int(1)));
  CHECK(check_sat(f).unsat());
}

TEST_CASE("congruence on products discharges the squared-saturate query") {
  Location in = glob("in"), r = glob("r"), out = glob("out");
  FormulaRef f = mk_and(
      mk_and(mk_and(mk_cmp(CmpOp::Le, mk_loc(in), mk_int(10)), mk_cmp(CmpOp::Ge, mk_loc(in), mk_int(0))),
             mk_and(mk_cmp(CmpOp::Eq, mk_loc(r), mk_loc(in)),
                    mk_cmp(CmpOp::Eq, mk_loc(out), mk_mul(mk_loc(r), mk_loc(r))))),
      mk_not(mk_cmp(CmpOp::Eq, mk_loc(out), mk_mul(mk_loc(in), mk_loc(in)))));

  // independent confirmation first: exhaustive enumeration finds no witness
  // (r and out are pinned by equations, so these bounds cover all of them)
  VarBounds b;
  b.ranges[StateVar::cur(in)] = {0, 10};
  b.ranges[StateVar::cur(r)] = {0, 10};
  b.ranges[StateVar::cur(out)] = {0, 100};
  FormulaCheck oracle = check_formula(f, b);
  REQUIRE_FALSE(oracle.refused);
  CHECK_FALSE(oracle.witness.has_value());

  CHECK(check_sat(f).unsat());
}

TEST_CASE("check_valid basics") {
  Location x = glob("x");
  // (x >= 0 && x <= 10) ==> x <= 10
  FormulaRef f1 = mk_implies(mk_and(mk_cmp(CmpOp::Ge, mk_loc(x), mk_int(0)),
                                    mk_cmp(CmpOp::Le, mk_loc(x), mk_int(10))),
                             mk_cmp(CmpOp::Le, mk_loc(x), mk_int(10)));
  CHECK(check_valid(f1).valid());

  // x >= 0 ==> x >= 1 has countermodel x = 0
  FormulaRef f2 = mk_implies(mk_cmp(CmpOp::Ge, mk_loc(x), mk_int(0)),
                             mk_cmp(CmpOp::Ge, mk_loc(x), mk_int(1)));
  SolverVerdict v = check_valid(f2);
  REQUIRE(v.sat());
  CHECK(v.model.at(StateVar::cur(x)) == 0);
}

TEST_CASE("constant folding through products proves r=10 => r*r=100") {
  Location r = glob("r");
  FormulaRef f = mk_implies(mk_cmp(CmpOp::Eq, mk_loc(r), mk_int(10)),
                            mk_cmp(CmpOp::Eq, mk_mul(mk_loc(r), mk_loc(r)), mk_int(100)));
  // enumeration oracle first
  FormulaCheck oracle = check_formula(f, -16, 16);
  REQUIRE_FALSE(oracle.refused);
  CHECK(oracle.holds_for_all);
  CHECK(check_valid(f).valid());
}

TEST_CASE("entails") {
  Location lim = glob("lim");
  CHECK(entails(mk_bool(false), mk_cmp(CmpOp::Eq, mk_loc(lim), mk_int(3))).valid());
  SolverVerdict v = entails(mk_cmp(CmpOp::Eq, mk_loc(lim), mk_int(10)),
                            mk_cmp(CmpOp::Eq, mk_loc(lim), mk_int(9)));
  CHECK(v.sat()); // countermodel

  // published saturate ensures entails the result disjunction
  Location x{LocKind::Param, "x", "saturate"}, l{LocKind::Param, "lim", "saturate"},
      in = glob("in");
  FormulaRef common = mk_and(mk_cmp(CmpOp::Eq, mk_old(l), mk_int(10)),
                             mk_cmp(CmpOp::Eq, mk_old(x), mk_old(in)));
  FormulaRef path1 = mk_and(mk_and(common, mk_cmp(CmpOp::Gt, mk_old(x), mk_old(l))),
                            mk_cmp(CmpOp::Eq, mk_result(), mk_old(l)));
  FormulaRef path2 = mk_and(mk_and(common, mk_not(mk_cmp(CmpOp::Gt, mk_old(x), mk_old(l)))),
                            mk_cmp(CmpOp::Eq, mk_result(), mk_old(x)));
  FormulaRef ensures = mk_or(path1, path2);
  FormulaRef target = mk_or(mk_cmp(CmpOp::Eq, mk_result(), mk_old(in)),
                            mk_cmp(CmpOp::Eq, mk_result(), mk_int(10)));
  CHECK(entails(ensures, target).valid());
}

TEST_CASE("DNF cap yields unknown with a reason") {
  Location x = glob("x");
  FormulaRef f = mk_bool(false);
  for (int i = 0; i < 5000; ++i)
    f = mk_or(f, mk_cmp(CmpOp::Eq, mk_loc(x), mk_int(i)));
  SolverVerdict v = check_sat(f);
  CHECK(v.unknown());
  CHECK(v.reason.find("too large") != std::string::npos);
}

TEST_CASE("differential against exhaustive enumeration") {
  testgen::Rng rng(424242);
  std::vector<StateVar> vars = {StateVar::cur(glob("a")), StateVar::cur(glob("b")),
                                StateVar::cur(glob("c"))};
  int unknowns = 0;
  for (int iter = 0; iter < 300; ++iter) {
    int nv = rng.range(1, 3);
    std::vector<StateVar> use(vars.begin(), vars.begin() + nv);
    FormulaRef core = testgen::random_formula(rng, use, rng.range(1, 3), true);
    FormulaRef f = with_domain(core, use, 8);

    FormulaCheck oracle = check_formula(f, -8, 8);
    REQUIRE_FALSE(oracle.refused);

    SolverVerdict v = check_sat(f);
    if (v.unknown()) {
      ++unknowns;
      continue;
    }
    if (v.sat()) {
      CHECK_MESSAGE(oracle.witness.has_value(), "solver SAT, oracle UNSAT: ", render_formula(f));
      auto ev = eval_formula(f, v.model);
      REQUIRE(ev.has_value());
      CHECK(*ev); // model self-check
    } else {
      CHECK_MESSAGE(!oracle.witness.has_value(), "solver UNSAT, oracle SAT: ", render_formula(f));
    }
  }
  CHECK(unknowns <= 30); // <10% on this corpus
}

TEST_CASE("resource limits only resolve unknowns, never flip verdicts") {
  testgen::Rng rng(99);
  std::vector<StateVar> vars = {StateVar::cur(glob("a")), StateVar::cur(glob("b"))};
  SolverLimits tight;
  tight.cube_cap = 2;
  tight.enum_cap = 50;
  for (int iter = 0; iter < 200; ++iter) {
    FormulaRef f = with_domain(testgen::random_formula(rng, vars, 2, true), vars, 8);
    SolverVerdict small = check_sat(f, tight);
    SolverVerdict big = check_sat(f);
    if (!small.unknown()) {
      CHECK(small.kind == big.kind);
    }
  }
}

TEST_CASE("two-state formulas flatten into distinct variables") {
  Location g = glob("g");
  // g == \old(g) + 1 && \old(g) == 5 && g == 6 is satisfiable
  FormulaRef f = mk_and(mk_and(mk_cmp(CmpOp::Eq, mk_loc(g), mk_add(mk_old(g), mk_int(1))),
                               mk_cmp(CmpOp::Eq, mk_old(g), mk_int(5))),
                        mk_cmp(CmpOp::Eq, mk_loc(g), mk_int(6)));
  SolverVerdict v = check_sat(f);
  REQUIRE(v.sat());
  CHECK(v.model.at(StateVar::old(g)) == 5);
  CHECK(v.model.at(StateVar::cur(g)) == 6);
  // and the contradictory version is unsat
  FormulaRef bad = mk_and(f, mk_cmp(CmpOp::Eq, mk_loc(g), mk_int(7)));
  CHECK(check_sat(bad).unsat());
}
