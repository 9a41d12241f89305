#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "microdeduct/ast.hpp"
#include "microdeduct/diag.hpp"

namespace microdeduct {

struct ParseResult {
  std::optional<ModuleAst> module;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return module.has_value(); }
};

// Lex, parse, resolve and validate a MicroC module. On success the module
// satisfies every language invariant: one contracted entry function, acyclic
// call graph, annotated loops, no unsupported constructs.
ParseResult parse_module(std::string_view source);

// Canonical pretty-printer. parse_module(emit_source(m)) is structurally
// equal to m, and emit is a function of the AST alone (byte-stable).
std::string emit_source(const ModuleAst &m);

// Reverse-topological order: every callee precedes its callers.
struct CallGraphResult {
  std::vector<std::string> order;
  std::vector<Diagnostic> diagnostics; // cycle diagnostics

  bool ok() const { return diagnostics.empty(); }
};

CallGraphResult call_graph(const ModuleAst &m);

// Direct callees of a function, in call order.
std::vector<std::string> callees_of(const FunctionDef &fn);

} // namespace microdeduct
