#include "doctest.h"

#include "microdeduct/logic.hpp"
#include "microdeduct/oracle.hpp"
#include "support/gen.hpp"

using namespace microdeduct;

namespace {

Location glob(const std::string &n) { return {LocKind::Global, n, ""}; }

} // namespace

TEST_CASE("interning gives pointer equality for structural equality") {
  TermRef a = mk_add(mk_loc(glob("x")), mk_int(1));
  TermRef b = mk_add(mk_loc(glob("x")), mk_int(1));
  CHECK(a == b);
  FormulaRef f = mk_cmp(CmpOp::Lt, a, mk_int(5));
  FormulaRef g = mk_cmp(CmpOp::Lt, b, mk_int(5));
  CHECK(f == g);
}

TEST_CASE("substitute replaces plain locations simultaneously") {
  Location x = glob("x"), y = glob("y");
  // (x > 5)[x -> y+1]  ==  y+1 > 5
  FormulaRef f = mk_cmp(CmpOp::Gt, mk_loc(x), mk_int(5));
  FormulaRef r = substitute(f, {{x, mk_add(mk_loc(y), mk_int(1))}});
  CHECK(r == mk_cmp(CmpOp::Gt, mk_add(mk_loc(y), mk_int(1)), mk_int(5)));

  // (out == in*in)[out -> x]  ==  x == in*in
  Location out = glob("out"), in = glob("in");
  FormulaRef g = mk_cmp(CmpOp::Eq, mk_loc(out), mk_mul(mk_loc(in), mk_loc(in)));
  FormulaRef gr = substitute(g, {{out, mk_loc(x)}});
  CHECK(gr == mk_cmp(CmpOp::Eq, mk_loc(x), mk_mul(mk_loc(in), mk_loc(in))));

  // simultaneous: (x == y)[x -> y, y -> x] swaps
  FormulaRef s = mk_cmp(CmpOp::Eq, mk_loc(x), mk_loc(y));
  FormulaRef sr = substitute(s, {{x, mk_loc(y)}, {y, mk_loc(x)}});
  CHECK(sr == mk_cmp(CmpOp::Eq, mk_loc(y), mk_loc(x)));
}

TEST_CASE("substitute leaves \\old untouched") {
  Location in = glob("in");
  FormulaRef f = mk_cmp(CmpOp::Eq, mk_old(in), mk_loc(in));
  FormulaRef r = substitute(f, {{in, mk_int(0)}});
  CHECK(r == mk_cmp(CmpOp::Eq, mk_old(in), mk_int(0)));
}

TEST_CASE("substitution soundness against exhaustive evaluation") {
  // eval(f[x -> t], e) == eval(f, e[x -> eval(t, e)]) over a small domain
  testgen::Rng rng(20240601);
  Location x = glob("x"), y = glob("y");
  std::vector<StateVar> vars = {StateVar::cur(x), StateVar::cur(y)};
  for (int iter = 0; iter < 200; ++iter) {
    FormulaRef f = testgen::random_formula(rng, vars, 2, true);
    TermRef t = testgen::random_term(rng, vars, 2, true);
    FormulaRef fs = substitute(f, {{x, t}});
    for (int64_t vx = -3; vx <= 3; ++vx)
      for (int64_t vy = -3; vy <= 3; ++vy) {
        Valuation e{{StateVar::cur(x), vx}, {StateVar::cur(y), vy}};
        auto tv = eval_term(t, e);
        REQUIRE(tv.has_value());
        Valuation e2 = e;
        e2[StateVar::cur(x)] = *tv;
        auto lhs = eval_formula(fs, e);
        auto rhs = eval_formula(f, e2);
        REQUIRE(lhs.has_value());
        REQUIRE(rhs.has_value());
        CHECK(*lhs == *rhs);
      }
  }
}

TEST_CASE("normalize_ensures keeps footprint post-state and rewrites the rest") {
  Location out = glob("out"), in = glob("in");

  // ensures out == \old(out) with footprint {out}: post out stays plain
  FormulaRef f = mk_cmp(CmpOp::Eq, mk_loc(out), mk_old(out));
  CHECK(normalize_ensures(f, {out}) == f);

  // Fig.-style fragment: \result == \old(in) || \result == 10 is already
  // two-state and mentions no footprint location
  FormulaRef g = mk_or(mk_cmp(CmpOp::Eq, mk_result(), mk_old(in)),
                       mk_cmp(CmpOp::Eq, mk_result(), mk_int(10)));
  CHECK(normalize_ensures(g, {}) == g);

  // empty footprint: every plain global reads as its pre-state
  FormulaRef h = mk_cmp(CmpOp::Eq, mk_loc(out), mk_int(3));
  CHECK(normalize_ensures(h, {}) == mk_cmp(CmpOp::Eq, mk_old(out), mk_int(3)));

  // value params always read as pre-state
  Location p{LocKind::Param, "p", "f"};
  FormulaRef k = mk_cmp(CmpOp::Ge, mk_loc(p), mk_int(0));
  CHECK(normalize_ensures(k, {}) == mk_cmp(CmpOp::Ge, mk_old(p), mk_int(0)));
}

TEST_CASE("simplify folds constants and drops units") {
  Location x = glob("x");
  // 10*10 == x  ->  100 == x
  FormulaRef f = mk_cmp(CmpOp::Eq, mk_mul(mk_int(10), mk_int(10)), mk_loc(x));
  CHECK(simplify(f) == mk_cmp(CmpOp::Eq, mk_int(100), mk_loc(x)));

  // P && true -> P
  FormulaRef p = mk_cmp(CmpOp::Gt, mk_loc(x), mk_int(0));
  CHECK(simplify(mk_and(p, mk_bool(true))) == p);

  // 3 < 2 -> false
  CHECK(simplify(mk_cmp(CmpOp::Lt, mk_int(3), mk_int(2))) == mk_bool(false));

  CHECK(simplify(mk_mul(mk_loc(x), mk_int(0))) == mk_int(0));
  CHECK(simplify(mk_mul(mk_loc(x), mk_int(1))) == mk_loc(x));
  CHECK(simplify(mk_sub(mk_loc(x), mk_loc(x))) == mk_int(0));
}

TEST_CASE("simplify is idempotent and truth-preserving") {
  testgen::Rng rng(7771);
  Location x = glob("x"), y = glob("y");
  std::vector<StateVar> vars = {StateVar::cur(x), StateVar::cur(y), StateVar::old(x)};
  for (int iter = 0; iter < 300; ++iter) {
    FormulaRef f = testgen::random_formula(rng, vars, 3, true);
    FormulaRef s = simplify(f);
    CHECK(simplify(s) == s);
    // truth preserved on every bounded environment
    for (int64_t vx = -3; vx <= 3; ++vx)
      for (int64_t vy = -3; vy <= 3; ++vy)
        for (int64_t ox = -3; ox <= 3; ++ox) {
          Valuation e{{StateVar::cur(x), vx}, {StateVar::cur(y), vy}, {StateVar::old(x), ox}};
          auto a = eval_formula(f, e);
          auto c = eval_formula(s, e);
          REQUIRE(a.has_value());
          REQUIRE(c.has_value());
          CHECK(*a == *c);
        }
  }
}

TEST_CASE("free_locations flags plain and old separately") {
  Location lim = glob("lim"), x = glob("x"), in = glob("in"), out = glob("out");
  FormulaRef f = mk_and(mk_cmp(CmpOp::Eq, mk_loc(lim), mk_int(10)),
                        mk_cmp(CmpOp::Eq, mk_loc(x), mk_loc(in)));
  LocUse u = free_locations(f);
  CHECK(u.plain == std::set<Location>{lim, x, in});
  CHECK(u.old.empty());
  CHECK_FALSE(u.uses_result);

  CHECK(free_locations(mk_bool(true)).plain.empty());

  FormulaRef g = mk_cmp(CmpOp::Eq, mk_old(out), mk_loc(out));
  LocUse ug = free_locations(g);
  CHECK(ug.plain == std::set<Location>{out});
  CHECK(ug.old == std::set<Location>{out});
}

TEST_CASE("rendering uses annotation precedence") {
  Location in = glob("in"), out = glob("out");
  FormulaRef imp1 = mk_implies(mk_cmp(CmpOp::Le, mk_loc(in), mk_int(10)),
                               mk_cmp(CmpOp::Eq, mk_loc(out), mk_mul(mk_loc(in), mk_loc(in))));
  FormulaRef imp2 = mk_implies(mk_cmp(CmpOp::Gt, mk_loc(in), mk_int(10)),
                               mk_cmp(CmpOp::Eq, mk_loc(out), mk_int(100)));
  CHECK(render_formula(mk_and(imp1, imp2)) ==
        "(in <= 10 ==> out == in * in) && (in > 10 ==> out == 100)");
  CHECK(render_formula(mk_or(mk_cmp(CmpOp::Eq, mk_result(), mk_old(in)),
                             mk_cmp(CmpOp::Eq, mk_result(), mk_int(10)))) ==
        "\\result == \\old(in) || \\result == 10");
  // && binds tighter than ||
  FormulaRef a = mk_cmp(CmpOp::Eq, mk_loc(in), mk_int(1));
  FormulaRef b = mk_cmp(CmpOp::Eq, mk_loc(in), mk_int(2));
  FormulaRef c = mk_cmp(CmpOp::Eq, mk_loc(in), mk_int(3));
  CHECK(render_formula(mk_or(mk_and(a, b), c)) == "in == 1 && in == 2 || in == 3");
  CHECK(render_formula(mk_and(mk_or(a, b), c)) == "(in == 1 || in == 2) && in == 3");
}
