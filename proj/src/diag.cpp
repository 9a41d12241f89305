#include "microdeduct/diag.hpp"

#include <sstream>

namespace microdeduct {

namespace {

const char *category_str(DiagCategory c) {
  switch (c) {
  case DiagCategory::Parse:
    return "parse";
  case DiagCategory::Unsupported:
    return "unsupported";
  case DiagCategory::Resolution:
    return "resolution";
  }
  return "?";
}

} // namespace

std::string render_diagnostic(const Diagnostic &d) {
  std::ostringstream out;
  out << (d.severity == Severity::Error ? "error" : "warning");
  out << " [" << category_str(d.category) << "]";
  if (d.span.known())
    out << " at " << d.span.line << ":" << d.span.col;
  out << ": " << d.message;
  return out.str();
}

std::string render_diagnostics(const std::vector<Diagnostic> &ds) {
  std::string out;
  for (auto &d : ds) {
    out += render_diagnostic(d);
    out += "\n";
  }
  return out;
}

} // namespace microdeduct
