#include "doctest.h"

#include "microdeduct/frontend.hpp"
#include "support/testutil.hpp"

using namespace microdeduct;
using namespace microdeduct::testutil;

namespace {

bool has_category(const std::vector<Diagnostic> &ds, DiagCategory cat) {
  for (auto &d : ds)
    if (d.category == cat && d.severity == Severity::Error)
      return true;
  return false;
}

bool mentions(const std::vector<Diagnostic> &ds, const std::string &needle) {
  for (auto &d : ds)
    if (d.message.find(needle) != std::string::npos)
      return true;
  return false;
}

} // namespace

TEST_CASE("golden program parses with the expected shape") {
  ModuleAst m = load_module(testdata("sat_square.c"));
  REQUIRE(m.functions.size() == 4);
  CHECK(m.functions[0].name == "read_input");
  CHECK(m.functions[1].name == "write_output");
  CHECK(m.functions[2].name == "saturate");
  CHECK(m.functions[3].name == "main");
  CHECK(m.entry == "main");
  CHECK(m.globals.size() == 2);
  const FunctionDef *main_fn = m.find_function("main");
  REQUIRE(main_fn->contract.has_value());
  CHECK(main_fn->contract->requires_clauses.size() == 1);
  CHECK(main_fn->contract->ensures_clauses.size() == 1);
  CHECK_FALSE(m.find_function("saturate")->contract.has_value());
}

TEST_CASE("empty source is rejected: no entry function") {
  ParseResult r = parse_module("");
  CHECK_FALSE(r.ok());
  CHECK(has_category(r.diagnostics, DiagCategory::Resolution));
  CHECK(mentions(r.diagnostics, "no entry function"));
}

TEST_CASE("recursion is rejected as unsupported") {
  const char *src = R"(
/*@ requires \true; ensures \true; */
void main() {
  helper(1);
}
void helper(int x) {
  helper(x);
}
)";
  ParseResult r = parse_module(src);
  CHECK_FALSE(r.ok());
  CHECK(has_category(r.diagnostics, DiagCategory::Unsupported));
  CHECK(mentions(r.diagnostics, "recursion"));
}

TEST_CASE("unsupported constructs are all rejected with the right category") {
  auto rejected = [](const std::string &src, const std::string &needle) {
    ParseResult r = parse_module(src);
    CHECK_FALSE(r.ok());
    CHECK(has_category(r.diagnostics, DiagCategory::Unsupported));
    CHECK(mentions(r.diagnostics, needle));
  };
  rejected("float f;", "floating-point");
  rejected("/*@ requires \\true; */ void main() { int x = 1; }\nvoid h(float x) {}", "floating-point");
  rejected("/*@ requires \\true; */ void main() { static int x = 1; }", "static");
  rejected("int **p;", "pointer");
  rejected("void h(int **p) {}", "nested pointers");
  rejected("int g;\n/*@ requires \\true; */ void main() { int x = 1; /*no inv*/ while (x > 0) { x = x - 1; } }",
           "loop invariant");
  rejected("int g;\nvoid h(int *p) { g = *p; }\n/*@ requires \\true; */ void main() { int x = &g; }",
           "'&' may only appear as a call argument");
  // pointer used as a value
  {
    ParseResult r = parse_module("void h(int *p) { int x = p + 1; }\n/*@ requires \\true; */ void main() { }");
    CHECK_FALSE(r.ok());
    CHECK(has_category(r.diagnostics, DiagCategory::Unsupported));
    CHECK(mentions(r.diagnostics, "pointer"));
  }
}

TEST_CASE("aliasing reference arguments are rejected") {
  const char *dup = R"(
int g;
void two(int *p, int *q) {
  *p = 1;
  *q = 2;
}
/*@ requires \true; */
void main() {
  two(&g, &g);
}
)";
  ParseResult r = parse_module(dup);
  CHECK_FALSE(r.ok());
  CHECK(has_category(r.diagnostics, DiagCategory::Unsupported));
  CHECK(mentions(r.diagnostics, "aliasing"));

  const char *mixed = R"(
int g;
void set(int *p) {
  *p = g;
}
/*@ requires \true; */
void main() {
  set(&g);
}
)";
  ParseResult r2 = parse_module(mixed);
  CHECK_FALSE(r2.ok());
  CHECK(mentions(r2.diagnostics, "accesses global"));
}

TEST_CASE("value parameters are immutable") {
  ParseResult r = parse_module("int f(int x) { x = 1; return x; }\n/*@ requires \\true; */ void main() { }");
  CHECK_FALSE(r.ok());
  CHECK(mentions(r.diagnostics, "cannot assign to value parameter"));
}

TEST_CASE("multiple user contracts are rejected") {
  const char *src = R"(
/*@ requires \true; */
void a() { }
/*@ requires \true; */
void main() { }
)";
  ParseResult r = parse_module(src);
  CHECK_FALSE(r.ok());
  CHECK(mentions(r.diagnostics, "multiple functions carry user contracts"));
}

TEST_CASE("emit_source renders the golden contract text") {
  ModuleAst m = load_module(testdata("sat_square.c"));
  std::string text = emit_source(m);
  CHECK(text.find("requires in >= 0;") != std::string::npos);
  CHECK(text.find("(in <= 10 ==> out == in * in) && (in > 10 ==> out == 100)") != std::string::npos);
}

TEST_CASE("assigns nothing renders as \\nothing") {
  const char *src = R"(
int g;
/*@ requires \true;
    assigns \nothing;
*/
void main() {
  int x = 1;
}
)";
  ModuleAst m = parse_or_die(src);
  std::string text = emit_source(m);
  CHECK(text.find("assigns \\nothing;") != std::string::npos);
}

TEST_CASE("round-trip: parse(emit(m)) is structurally equal and emit is stable") {
  ModuleAst m = load_module(testdata("sat_square.c"));
  std::string first = emit_source(m);
  ModuleAst m2 = parse_or_die(first);
  CHECK(structurally_equal(m, m2));
  std::string second = emit_source(m2);
  CHECK(first == second);
}

TEST_CASE("provenance marks survive the round trip") {
  const char *src = R"(
int g;

/*@ requires g >= 0; // Auxiliary
    requires g <= 5; // Functional
    ensures g == \old(g); // Functional
    assigns \nothing; // Auxiliary
*/
int helper(int x) {
  return x;
}

/*@ requires g >= 0;
*/
void main() {
  int t = helper(g);
}
)";
  ModuleAst m = parse_or_die(src);
  const Contract &c = *m.find_function("helper")->contract;
  REQUIRE(c.requires_clauses.size() == 2);
  CHECK(c.requires_clauses[0].provenance == Provenance::Auxiliary);
  CHECK(c.requires_clauses[1].provenance == Provenance::Functional);
  CHECK(c.ensures_clauses[0].provenance == Provenance::Functional);
  CHECK(c.assigns->provenance == Provenance::Auxiliary);
  CHECK(m.entry == "main"); // helper has no user clause

  ModuleAst m2 = parse_or_die(emit_source(m));
  CHECK(structurally_equal(m, m2));
}

TEST_CASE("chained comparisons desugar in annotations only") {
  const char *src = R"(
int g;
/*@ requires 0 <= g <= 10;
*/
void main() {
  g = 1;
}
)";
  ModuleAst m = parse_or_die(src);
  FormulaRef req = m.find_function("main")->contract->requires_clauses[0].formula;
  Location g{LocKind::Global, "g", ""};
  CHECK(req == mk_and(mk_cmp(CmpOp::Le, mk_int(0), mk_loc(g)),
                      mk_cmp(CmpOp::Le, mk_loc(g), mk_int(10))));

  ParseResult bad = parse_module("int g;\n/*@ requires \\true; */ void main() { if (0 <= g <= 10) { g = 1; } }");
  CHECK_FALSE(bad.ok());
}

TEST_CASE("call graph orders callees before callers") {
  ModuleAst m = load_module(testdata("sat_square.c"));
  CallGraphResult cg = call_graph(m);
  REQUIRE(cg.ok());
  REQUIRE(cg.order.size() == 4);
  CHECK(cg.order[3] == "main");

  // singleton
  ModuleAst one = parse_or_die("/*@ requires \\true; */ void main() { int x = 1; }");
  CallGraphResult cg1 = call_graph(one);
  REQUIRE(cg1.ok());
  CHECK(cg1.order == std::vector<std::string>{"main"});

  // chain main -> f -> g gives [g, f, main]
  const char *chain = R"(
int gv;
int g() { return gv; }
int f() { int t = g(); return t; }
/*@ requires \true; */
void main() {
  gv = f();
}
)";
  ModuleAst mc = parse_or_die(chain);
  CallGraphResult cgc = call_graph(mc);
  REQUIRE(cgc.ok());
  CHECK(cgc.order == std::vector<std::string>{"g", "f", "main"});
}

TEST_CASE("parsing is deterministic") {
  std::string src = read_file(testdata("sat_square.c"));
  ModuleAst a = parse_or_die(src);
  ModuleAst b = parse_or_die(src);
  CHECK(structurally_equal(a, b));
  CHECK(emit_source(a) == emit_source(b));

  ParseResult bad1 = parse_module("void main() { oops; }");
  ParseResult bad2 = parse_module("void main() { oops; }");
  REQUIRE(bad1.diagnostics.size() == bad2.diagnostics.size());
  for (size_t i = 0; i < bad1.diagnostics.size(); ++i)
    CHECK(bad1.diagnostics[i].message == bad2.diagnostics[i].message);
}

TEST_CASE("note trailers survive the round trip") {
  const char *src = R"(
int g;
/*@ requires \true; */
void main() {
  g = 1;
}
// note: dropped constraint example
)";
  ModuleAst m = parse_or_die(src);
  REQUIRE(m.notes.size() == 1);
  CHECK(m.notes[0] == "dropped constraint example");
  ModuleAst m2 = parse_or_die(emit_source(m));
  CHECK(structurally_equal(m, m2));
}
