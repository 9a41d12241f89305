#include <map>
#include <set>

#include "microdeduct/frontend.hpp"

namespace microdeduct {

namespace {

void collect_callees(const std::vector<Stmt> &body, std::vector<std::string> &out) {
  for (auto &s : body) {
    if (s.call)
      out.push_back(s.call->callee);
    collect_callees(s.then_body, out);
    collect_callees(s.else_body, out);
    collect_callees(s.body, out);
  }
}

} // namespace

std::vector<std::string> callees_of(const FunctionDef &fn) {
  std::vector<std::string> out;
  collect_callees(fn.body, out);
  return out;
}

// Kahn's algorithm over caller->callee edges. Ties broken by declaration
// order so the result is deterministic; output lists callees before callers.
CallGraphResult call_graph(const ModuleAst &m) {
  CallGraphResult res;
  std::map<std::string, std::set<std::string>> callees; // deduplicated edges
  std::map<std::string, int> pending;                   // # of unprocessed callees
  for (auto &fn : m.functions) {
    auto &cs = callees[fn.name];
    for (auto &c : callees_of(fn))
      if (m.find_function(c))
        cs.insert(c);
    pending[fn.name] = 0;
  }
  for (auto &[caller, cs] : callees)
    pending[caller] = static_cast<int>(cs.size());

  std::map<std::string, std::vector<std::string>> callers;
  for (auto &[caller, cs] : callees)
    for (auto &c : cs)
      callers[c].push_back(caller);

  for (;;) {
    bool progressed = false;
    for (auto &fn : m.functions) { // declaration order
      if (pending[fn.name] != 0)
        continue;
      bool emitted = false;
      for (auto &done : res.order)
        if (done == fn.name) {
          emitted = true;
          break;
        }
      if (emitted)
        continue;
      res.order.push_back(fn.name);
      for (auto &caller : callers[fn.name])
        --pending[caller];
      progressed = true;
    }
    if (!progressed)
      break;
  }

  if (res.order.size() != m.functions.size()) {
    std::vector<std::string> stuck;
    for (auto &fn : m.functions) {
      bool emitted = false;
      for (auto &done : res.order)
        if (done == fn.name)
          emitted = true;
      if (!emitted)
        stuck.push_back(fn.name);
    }
    std::string msg = "recursion is not supported (call cycle through";
    for (auto &s : stuck)
      msg += " '" + s + "'";
    msg += ")";
    const FunctionDef *f = m.find_function(stuck.front());
    res.diagnostics.push_back({Severity::Error, DiagCategory::Unsupported, f ? f->span : SourceSpan{}, msg});
    res.order.clear();
  }
  return res;
}

} // namespace microdeduct
