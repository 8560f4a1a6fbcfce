#pragma once

// Shared plumbing for the test suites: pipeline invocation, corpus access,
// an independent expression evaluator, and a random design generator used
// by the property and acceptance suites.

#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bluec/desugar.hpp"
#include "bluec/diag.hpp"
#include "bluec/elaborate.hpp"
#include "bluec/guards.hpp"
#include "bluec/netlist.hpp"
#include "bluec/parser.hpp"
#include "bluec/printer.hpp"
#include "bluec/schedule.hpp"
#include "bluec/sim.hpp"

namespace testutil {

inline std::string corpusPath(const std::string& name) {
  return std::string(BLUEC_CORPUS_DIR) + "/" + name;
}

inline std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct PipelineOptions {
  std::string top;          // empty: sole module, else the sole Empty module
  bool relaxed = false;
  bool nonStrict = false;
};

struct Pipeline {
  bluec::core::Design design;
  bluec::guards::GuardSet gs;
  bluec::sched::Schedule sched;
  bluec::Diagnostics diags;
};

inline std::string pickTop(const bluec::ast::SurfaceAst& unit, const std::string& requested) {
  if (!requested.empty()) return requested;
  if (unit.modules.size() == 1) return unit.modules[0].name;
  std::string found;
  for (const auto& m : unit.modules)
    if (m.ifcName == "Empty") {
      if (!found.empty()) throw std::runtime_error("several candidate top modules");
      found = m.name;
    }
  if (found.empty()) throw std::runtime_error("no top module");
  return found;
}

inline Pipeline compileSource(const std::string& fileName, const std::string& text,
                              const PipelineOptions& opt = {}) {
  using namespace bluec;
  auto unit = desugarSugar(parseSource(fileName, text));
  Pipeline p;
  p.design = elaborate(unit, pickTop(unit, opt.top),
                       opt.nonStrict ? core::GuardMode::NonStrict : core::GuardMode::Strict);
  p.gs = guards::buildGuards(p.design);
  p.sched = sched::buildSchedule(p.design, p.gs, opt.relaxed, p.diags);
  return p;
}

inline Pipeline compileFile(const std::string& name, const PipelineOptions& opt = {}) {
  return compileSource(name, readFile(corpusPath(name)), opt);
}

inline bluec::sim::Trace run(const Pipeline& p, uint64_t maxCycles = 64,
                             bool capture = false) {
  bluec::sim::Options o;
  o.maxCycles = maxCycles;
  o.captureSignals = capture;
  return bluec::sim::simulate(p.design, p.sched, o);
}

// Register values after each cycle's commit.
inline std::vector<uint64_t> regColumn(const bluec::sim::Trace& t, const std::string& path) {
  std::vector<uint64_t> out;
  for (const auto& c : t.cycles) out.push_back(c.registers.at(path));
  return out;
}

// Register values at the start of each cycle: reset first, then the
// committed value from the previous cycle.
inline std::vector<uint64_t> startColumn(const Pipeline& p, const bluec::sim::Trace& t,
                                         const std::string& path) {
  const auto* inst = p.design.instance(path);
  std::vector<uint64_t> out{inst->reset};
  for (size_t k = 0; k + 1 < t.cycles.size(); ++k)
    out.push_back(t.cycles[k].registers.at(path));
  return out;
}

inline size_t firedCount(const bluec::sim::Trace& t, const std::string& rule) {
  size_t n = 0;
  for (const auto& c : t.cycles)
    for (const auto& f : c.fired)
      if (f == rule) ++n;
  return n;
}

inline std::vector<std::string> allDisplays(const bluec::sim::Trace& t) {
  std::vector<std::string> out;
  for (const auto& c : t.cycles)
    for (const auto& d : c.displays) out.push_back(d);
  return out;
}

// ---------------------------------------------------------------------------
// Independent expression evaluator over a register snapshot. Understands the
// subset produced for register-only designs; anything that needs primitive
// state beyond registers throws.

inline uint64_t maskW(uint64_t v, int width) {
  if (width >= 64) return v;
  return v & ((uint64_t{1} << width) - 1);
}

inline uint64_t evalOverRegs(const bluec::core::ExprPtr& e,
                             const std::map<std::string, uint64_t>& regs) {
  using namespace bluec::core;
  if (!e) return 1;
  switch (e->kind) {
    case Expr::Kind::Const:
      return maskW(e->value, e->width);
    case Expr::Kind::Read: {
      if (e->method != "_read") throw std::logic_error("non-register read in evalOverRegs");
      return regs.at(e->path);
    }
    case Expr::Kind::Un: {
      uint64_t a = evalOverRegs(e->a, regs);
      return e->un == UnOp::Not ? (a ? 0 : 1) : (a != 0 ? 1 : 0);
    }
    case Expr::Kind::Bin: {
      uint64_t a = evalOverRegs(e->a, regs);
      uint64_t b = evalOverRegs(e->b, regs);
      switch (e->bin) {
        case BinOp::Add: return maskW(a + b, e->width);
        case BinOp::Sub: return maskW(a - b, e->width);
        case BinOp::Mul: return maskW(a * b, e->width);
        case BinOp::Lt: return a < b;
        case BinOp::Le: return a <= b;
        case BinOp::Gt: return a > b;
        case BinOp::Ge: return a >= b;
        case BinOp::Eq: return a == b;
        case BinOp::Ne: return a != b;
        case BinOp::And: return (a & b) & 1;
        case BinOp::Or: return (a | b) & 1;
      }
      return 0;
    }
    case Expr::Kind::Mux:
      return maskW(evalOverRegs(e->c, regs) ? evalOverRegs(e->a, regs)
                                            : evalOverRegs(e->b, regs),
                   e->width);
    default:
      throw std::logic_error("unsupported node in evalOverRegs");
  }
}

// ---------------------------------------------------------------------------
// Conflict oracle, recomputed from first principles: two rules contend when
// they share a method that is not both always-ready and argument-free.

inline void collectTouches(const bluec::core::ExprPtr& e,
                           std::set<std::pair<std::string, std::string>>& out) {
  using namespace bluec::core;
  if (!e) return;
  if (e->kind == Expr::Kind::Read || e->kind == Expr::Kind::Ready)
    out.insert({e->path, e->method});
  for (const auto& a : e->args) collectTouches(a, out);
  collectTouches(e->a, out);
  collectTouches(e->b, out);
  collectTouches(e->c, out);
}

inline std::set<std::pair<std::string, std::string>> oracleResources(
    const bluec::core::Design& d, const bluec::core::Rule& r) {
  std::set<std::pair<std::string, std::string>> touched;
  collectTouches(r.guard, touched);
  for (const auto& ig : r.inheritedGuards) collectTouches(ig.guard, touched);
  for (const auto& a : r.actions) {
    collectTouches(a.when, touched);
    for (const auto& arg : a.args) collectTouches(arg, touched);
    if (a.kind == bluec::core::Action::Kind::Call) touched.insert({a.path, a.method});
  }
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& [path, method] : touched) {
    const auto* inst = d.instance(path);
    if (!inst) continue;
    const auto* m = inst->method(method);
    if (!m) continue;
    if (m->alwaysReady && m->argWidths.empty()) continue;
    out.insert({path, method});
  }
  return out;
}

inline bool oracleConflict(const bluec::core::Design& d, size_t r1, size_t r2) {
  auto a = oracleResources(d, d.rules[r1]);
  auto b = oracleResources(d, d.rules[r2]);
  for (const auto& x : a)
    if (b.count(x)) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Random register-only designs: a bounded atom pool keeps exhaustive
// truth-table checks cheap, and every guard and write stays inside the
// accepted source subset so the whole pipeline is exercised from text.

struct GeneratedDesign {
  std::string source;
  std::string name;
  int ruleCount = 0;
  std::vector<std::string> regNames;
};

inline GeneratedDesign randomDesign(std::mt19937& rng, bool disjointWriters = false) {
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); };

  GeneratedDesign g;
  g.name = "gen";
  int nRegs = 2 + pick(2);
  std::vector<int> widths;
  for (int k = 0; k < nRegs; ++k) {
    g.regNames.push_back("r" + std::to_string(k));
    widths.push_back(4 + pick(5));
  }

  static const char* cmps[] = {"<", "<=", ">", ">=", "==", "!="};
  int nAtoms = 2 + pick(5);  // at most 6 distinct guard atoms
  std::vector<std::string> atoms;
  for (int k = 0; k < nAtoms; ++k) {
    std::string reg = g.regNames[static_cast<size_t>(pick(nRegs))];
    atoms.push_back("(" + reg + " " + cmps[pick(6)] + " " + std::to_string(pick(13)) + ")");
  }

  auto atomRef = [&]() -> std::string {
    std::string a = atoms[static_cast<size_t>(pick(nAtoms))];
    return pick(4) == 0 ? "!" + a : a;
  };
  auto guard = [&]() -> std::string {
    switch (pick(5)) {
      case 0: return "True";
      case 1: return atomRef();
      case 2: return "(" + atomRef() + " && " + atomRef() + ")";
      case 3: return "(" + atomRef() + " || " + atomRef() + ")";
      default: return "(" + atomRef() + " && (" + atomRef() + " || " + atomRef() + "))";
    }
  };
  // Write values read only the register being written (and constants): with
  // one writer per register, any permutation of the fired rules then commits
  // the same state, so every standard-mode cycle stays serialisable. Guards
  // still range over every register.
  auto value = [&](int reg) -> std::string {
    std::string self = g.regNames[static_cast<size_t>(reg)];
    static const char* ops[] = {"+", "-", "*"};
    switch (pick(4)) {
      case 0: return std::to_string(pick(16));
      case 1: return self + " " + ops[pick(3)] + " " + std::to_string(1 + pick(4));
      case 2: return self + " + " + std::to_string(pick(8));
      default:
        return "(" + self + " < " + std::to_string(pick(13)) + " ? " + self + " + 1 : " + self +
               " + 2)";
    }
  };

  int nRules = 2 + pick(disjointWriters ? 2 : 5);  // at most 10 rules
  g.ruleCount = nRules;

  std::ostringstream body;
  std::vector<std::string> ruleNames;
  std::vector<bool> regTaken(static_cast<size_t>(nRegs), false);
  for (int r = 0; r < nRules; ++r) {
    std::string rn = "gr" + std::to_string(r);
    ruleNames.push_back(rn);
    body << "  rule " << rn << " (" << guard() << ");\n";
    int nWrites = 1 + ((!disjointWriters && pick(3) == 0) ? 1 : 0);
    std::set<int> written;
    for (int w = 0; w < nWrites; ++w) {
      int reg = pick(nRegs);
      if (disjointWriters) {
        int tries = 0;
        while (regTaken[static_cast<size_t>(reg)] && tries++ < 8) reg = pick(nRegs);
        if (regTaken[static_cast<size_t>(reg)]) break;
        regTaken[static_cast<size_t>(reg)] = true;
      }
      if (written.count(reg)) continue;
      written.insert(reg);
      body << "    " << g.regNames[static_cast<size_t>(reg)] << " <= " << value(reg) << ";\n";
    }
    body << "  endrule\n\n";
  }

  std::ostringstream src;
  if (!disjointWriters && pick(3) == 0 && nRules >= 2) {
    // A descending_urgency list over rule indices in ascending order is
    // always acyclic against the tie-break order.
    int first = pick(nRules - 1);
    int second = first + 1 + pick(nRules - first - 1);
    src << "(* descending_urgency = \"" << ruleNames[static_cast<size_t>(first)] << ", "
        << ruleNames[static_cast<size_t>(second)] << "\" *)\n";
  }
  src << "module gen ();\n";
  for (int k = 0; k < nRegs; ++k)
    src << "  Reg#(UInt(" << widths[static_cast<size_t>(k)] << ")) " << g.regNames[static_cast<size_t>(k)]
        << " <- mkReg(" << pick(6) << ");\n";
  src << "\n" << body.str() << "endmodule\n";
  g.source = src.str();
  return g;
}

// Registers statically written by a rule (the generator emits only
// unconditional whole-rule writes).
inline std::set<std::string> writtenRegs(const bluec::core::Design& d,
                                         const bluec::core::Rule& r) {
  std::set<std::string> out;
  for (const auto& a : r.actions) {
    if (a.kind != bluec::core::Action::Kind::Call || a.method != "_write") continue;
    const auto* inst = d.instance(a.path);
    if (inst && inst->kind == bluec::core::PrimKind::Register) out.insert(a.path);
  }
  return out;
}

}  // namespace testutil
