#pragma once

#include <string>
#include <vector>

namespace microdeduct {

struct SourceSpan {
  int line = 0;
  int col = 0;
  int end_line = 0;
  int end_col = 0;

  bool known() const { return line > 0; }
};

enum class Severity { Error, Warning };
enum class DiagCategory { Parse, Unsupported, Resolution };

struct Diagnostic {
  Severity severity = Severity::Error;
  DiagCategory category = DiagCategory::Parse;
  SourceSpan span;
  std::string message;
};

std::string render_diagnostic(const Diagnostic &d);
std::string render_diagnostics(const std::vector<Diagnostic> &ds);

inline bool has_errors(const std::vector<Diagnostic> &ds) {
  for (auto &d : ds)
    if (d.severity == Severity::Error)
      return true;
  return false;
}

} // namespace microdeduct
