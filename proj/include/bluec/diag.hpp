#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "bluec/source.hpp"

namespace bluec {

enum class Severity { Error, Warning, WarningHigh };

inline const char* severityName(Severity s) {
  switch (s) {
    case Severity::Error: return "error";
    case Severity::Warning: return "warning";
    case Severity::WarningHigh: return "warning-high";
  }
  return "error";
}

struct Diagnostic {
  Severity sev = Severity::Error;
  SourceLoc loc;
  std::string message;

  // Rendered as "file:line:col: severity: message".
  std::string str() const { return loc.str() + ": " + std::string(severityName(sev)) + ": " + message; }
};

// Accumulates warnings produced during compilation. Hard errors are thrown
// as CompileError instead so a phase stops at the first unrecoverable fault.
class Diagnostics {
 public:
  void warn(const SourceLoc& loc, std::string msg) {
    diags_.push_back({Severity::Warning, loc, std::move(msg)});
  }
  void warnHigh(const SourceLoc& loc, std::string msg) {
    diags_.push_back({Severity::WarningHigh, loc, std::move(msg)});
  }
  const std::vector<Diagnostic>& all() const { return diags_; }
  bool empty() const { return diags_.empty(); }
  void clear() { diags_.clear(); }

 private:
  std::vector<Diagnostic> diags_;
};

struct CompileError : std::runtime_error {
  SourceLoc loc;
  CompileError(SourceLoc l, const std::string& msg) : std::runtime_error(msg), loc(std::move(l)) {}
  std::string render() const { return loc.str() + ": error: " + what(); }
};

}  // namespace bluec
