#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bluec/source.hpp"

// Elaborated design: a flat set of primitive instances plus guarded atomic
// rules. There is no module hierarchy and no compile-time control flow left
// at this level; the only conditionals are per-action enabling conditions
// and value multiplexers.
namespace bluec::core {

enum class BinOp { Add, Sub, Mul, Lt, Le, Gt, Ge, Eq, Ne, And, Or };
enum class UnOp { Not, OrReduce };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind {
    Const,    // literal, width bits
    Str,      // string (PLI arguments only)
    Read,     // value-method call on a primitive instance
    Ready,    // ready net of a non-always-ready method
    Firing,   // another rule's grant (WILL_FIRE)
    Binding,  // result of an action-value method call in this rule
    Un,
    Bin,
    Mux,      // cond ? a : b, cond is 1 bit
    Net,      // reference to a named netlist wire (backend only)
  };
  Kind kind = Kind::Const;
  int width = 1;  // every node carries a width; evaluation wraps modulo 2^width

  uint64_t value = 0;             // Const
  std::string str;                // Str
  std::string path, method;       // Read / Ready
  std::vector<ExprPtr> args;      // Read arguments
  std::string rule;               // Firing
  int binding = -1;               // Binding, or net id for Net (name in str)
  UnOp un = UnOp::Not;
  BinOp bin = BinOp::Add;
  ExprPtr a, b, c;                // operands; Mux uses c ? a : b with cond in c
  SourceLoc loc;
};

ExprPtr mkConst(uint64_t v, int width, SourceLoc loc = {});
ExprPtr mkBool(bool v, SourceLoc loc = {});
ExprPtr mkStr(std::string s, SourceLoc loc = {});
ExprPtr mkRead(std::string path, std::string method, std::vector<ExprPtr> args, int width,
               SourceLoc loc = {});
ExprPtr mkReady(std::string path, std::string method, SourceLoc loc = {});
ExprPtr mkFiring(std::string rule, SourceLoc loc = {});
ExprPtr mkBinding(int id, int width, SourceLoc loc = {});
ExprPtr mkUn(UnOp op, ExprPtr a, SourceLoc loc = {});
ExprPtr mkBin(BinOp op, ExprPtr a, ExprPtr b, SourceLoc loc = {});
ExprPtr mkMux(ExprPtr cond, ExprPtr a, ExprPtr b, SourceLoc loc = {});
ExprPtr mkNet(int id, std::string name, int width, SourceLoc loc = {});

// Conjunction that folds constant-true operands away; nullptr means "true".
ExprPtr andAlso(ExprPtr a, ExprPtr b);

// Deterministic rendering, used for dumps, atom interning and tests.
std::string exprStr(const ExprPtr& e);

enum class Protocol { Value, ActionValue, Action };

struct MethodSpec {
  std::string name;
  Protocol protocol = Protocol::Value;
  bool alwaysReady = false;
  std::vector<int> argWidths;
  int resultWidth = 0;
};

enum class PrimKind { Register, Fifo, Pipe, SyncRam };

struct Instance {
  std::string path;  // dotted hierarchical name
  PrimKind kind = PrimKind::Register;
  int width = 0;          // data width
  uint64_t reset = 0;     // Register reset value
  int depth = 0;          // Fifo/Pipe capacity; SyncRam word count
  int addrWidth = 0;      // SyncRam
  std::vector<MethodSpec> methods;
  SourceLoc loc;

  const MethodSpec* method(const std::string& name) const {
    for (const auto& m : methods)
      if (m.name == name) return &m;
    return nullptr;
  }
};

struct Action {
  enum class Kind { Call, Pli };
  Kind kind = Kind::Call;
  ExprPtr when;  // enabling condition; nullptr = always (when the rule fires)
  // The enabling condition decomposed into branch conditions with polarity,
  // as collected while flattening if/case bodies. Guard analysis uses these
  // to qualify readiness under the non-strict semantics.
  std::vector<std::pair<ExprPtr, bool>> whenParts;

  std::string path, method;    // Call target
  std::vector<ExprPtr> args;
  int resultBinding = -1;      // action-value result id, -1 if none

  std::string pli;             // "$display" / "$finish"
  SourceLoc loc;
};

struct BindingInfo {
  int id = 0;
  int width = 0;
  std::string path, method;  // the action-value call that produces it
};

// Guard of a user method inlined into a rule, conjoined into the implicit
// guard set. Carries the call-site branch conditions so the non-strict
// semantics can qualify it the same way as method readiness.
struct InheritedGuard {
  ExprPtr guard;
  std::string method;
  std::vector<std::pair<ExprPtr, bool>> whenParts;
};

struct Rule {
  std::string name;  // hierarchical: instance path joined with '.', then rule name
  SourceLoc loc;
  ExprPtr guard;  // explicit guard only; implicit parts are derived by guard analysis
  std::vector<InheritedGuard> inheritedGuards;
  std::vector<Action> actions;
  std::vector<BindingInfo> bindings;
};

struct Annotations {
  // Each urgency/order annotation is a list of hierarchical rule names.
  std::vector<std::vector<std::string>> urgency;
  std::vector<std::vector<std::string>> executionOrder;
  std::vector<std::string> fireWhenEnabled;
};

// Module-level combinational taps (primBuffer statements). The first operand
// drives a named net in the RTL backend; the second is recorded but unused.
struct CombBuffer {
  std::string name;
  ExprPtr expr;
  ExprPtr unused;
  SourceLoc loc;
};

enum class GuardMode { Strict, NonStrict };

struct Design {
  std::string top;
  GuardMode guardMode = GuardMode::Strict;
  std::vector<Instance> instances;  // in elaboration order
  std::vector<Rule> rules;          // in elaboration order
  std::vector<CombBuffer> buffers;
  Annotations annotations;

  const Instance* instance(const std::string& path) const {
    for (const auto& inst : instances)
      if (inst.path == path) return &inst;
    return nullptr;
  }
  int ruleIndex(const std::string& name) const {
    for (size_t i = 0; i < rules.size(); ++i)
      if (rules[i].name == name) return static_cast<int>(i);
    return -1;
  }
};

}  // namespace bluec::core
