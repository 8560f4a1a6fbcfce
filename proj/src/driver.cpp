#include "bluec/driver.hpp"

#include <fstream>
#include <sstream>

#include "bluec/desugar.hpp"
#include "bluec/diag.hpp"
#include "bluec/elaborate.hpp"
#include "bluec/guards.hpp"
#include "bluec/netlist.hpp"
#include "bluec/parser.hpp"
#include "bluec/schedule.hpp"
#include "vendor/json.hpp"

namespace bluec {

namespace {

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CompileError({path, 0, 0}, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeFile(const std::string& path, const std::string& text, std::ostream& stdoutStream) {
  if (path == "-") {
    stdoutStream << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CompileError({path, 0, 0}, "cannot write file");
  out << text;
}

const char* kindName(core::PrimKind k) {
  switch (k) {
    case core::PrimKind::Register: return "register";
    case core::PrimKind::Fifo: return "fifo";
    case core::PrimKind::Pipe: return "pipe";
    case core::PrimKind::SyncRam: return "sync_ram";
  }
  return "?";
}

}  // namespace

std::string designJson(const core::Design& d) {
  nlohmann::json j;
  j["top"] = d.top;
  j["guard_semantics"] = d.guardMode == core::GuardMode::Strict ? "strict" : "non-strict";
  j["instances"] = nlohmann::json::array();
  for (const auto& i : d.instances) {
    nlohmann::json e;
    e["path"] = i.path;
    e["kind"] = kindName(i.kind);
    e["width"] = i.width;
    if (i.kind == core::PrimKind::Register) e["reset"] = i.reset;
    if (i.kind == core::PrimKind::Fifo || i.kind == core::PrimKind::Pipe) e["depth"] = i.depth;
    if (i.kind == core::PrimKind::SyncRam) e["addr_width"] = i.addrWidth;
    e["methods"] = nlohmann::json::array();
    for (const auto& m : i.methods) {
      nlohmann::json ms;
      ms["name"] = m.name;
      ms["protocol"] = m.protocol == core::Protocol::Value
                           ? "value"
                           : m.protocol == core::Protocol::Action ? "action" : "action_value";
      ms["always_ready"] = m.alwaysReady;
      ms["args"] = m.argWidths;
      if (m.resultWidth) ms["result_width"] = m.resultWidth;
      e["methods"].push_back(ms);
    }
    j["instances"].push_back(e);
  }
  j["rules"] = nlohmann::json::array();
  for (const auto& r : d.rules) {
    nlohmann::json e;
    e["name"] = r.name;
    e["at"] = r.loc.str();
    e["guard"] = core::exprStr(r.guard);
    for (const auto& ig : r.inheritedGuards)
      e["inherited_guards"].push_back({{"method", ig.method}, {"guard", core::exprStr(ig.guard)}});
    e["actions"] = nlohmann::json::array();
    for (const auto& a : r.actions) {
      nlohmann::json ae;
      if (a.when) ae["when"] = core::exprStr(a.when);
      if (a.kind == core::Action::Kind::Call) {
        ae["call"] = a.path + "." + a.method;
        ae["args"] = nlohmann::json::array();
        for (const auto& arg : a.args) ae["args"].push_back(core::exprStr(arg));
        if (a.resultBinding >= 0) ae["binds"] = a.resultBinding;
      } else {
        ae["pli"] = a.pli;
        ae["args"] = nlohmann::json::array();
        for (const auto& arg : a.args) ae["args"].push_back(core::exprStr(arg));
      }
      e["actions"].push_back(ae);
    }
    j["rules"].push_back(e);
  }
  j["annotations"]["descending_urgency"] = d.annotations.urgency;
  j["annotations"]["execution_order"] = d.annotations.executionOrder;
  j["annotations"]["fire_when_enabled"] = d.annotations.fireWhenEnabled;
  j["buffers"] = nlohmann::json::array();
  for (const auto& b : d.buffers)
    j["buffers"].push_back({{"name", b.name}, {"expr", core::exprStr(b.expr)}});
  return j.dump(2) + "\n";
}

std::string traceJson(const core::Design& d, const sim::Trace& t, bool relaxed) {
  nlohmann::json j;
  j["top"] = d.top;
  j["mode"] = relaxed ? "relaxed" : "standard";
  j["finished"] = t.finished;
  j["timed_out"] = t.timedOut;
  j["exit_code"] = t.exitCode;
  j["cycles"] = nlohmann::json::array();
  for (const auto& c : t.cycles) {
    nlohmann::json e;
    e["cycle"] = c.cycle;
    e["fired"] = c.fired;
    e["displays"] = c.displays;
    e["registers"] = c.registers;
    if (c.finished) e["finish_code"] = c.finishCode;
    j["cycles"].push_back(e);
  }
  return j.dump(2) + "\n";
}

int runDriver(const DriverOptions& opt) {
  std::ostream& out = *opt.out;
  std::ostream& err = *opt.err;
  try {
    if (opt.files.empty()) {
      err << "error: no input files\n";
      return 2;
    }
    std::vector<std::vector<Token>> tokenStreams;
    for (const auto& f : opt.files) tokenStreams.push_back(tokenize(f, readFile(f)));
    ast::SurfaceAst unit = parseUnit(tokenStreams);
    unit = desugarSugar(unit);

    std::string top = opt.top;
    if (top.empty()) {
      // Default to the sole module, or the sole module implementing Empty
      // (only such a module can be a top).
      std::vector<std::string> tops;
      for (const auto& m : unit.modules)
        if (m.ifcName == "Empty") tops.push_back(m.name);
      if (unit.modules.size() == 1) {
        top = unit.modules[0].name;
      } else if (tops.size() == 1) {
        top = tops[0];
      } else {
        err << "error: several candidate top modules; pick one with --top\n";
        return 2;
      }
    }

    core::Design design =
        elaborate(unit, top, opt.nonStrict ? core::GuardMode::NonStrict : core::GuardMode::Strict);
    guards::GuardSet gs = guards::buildGuards(design);
    Diagnostics diags;
    sched::Schedule sch = sched::buildSchedule(design, gs, opt.relaxed, diags);
    for (const auto& d : diags.all()) err << d.str() << "\n";

    if (opt.dumpCore) out << designJson(design);
    if (opt.dumpGuards) out << guards::guardReport(design, gs);
    if (!opt.scheduleOut.empty())
      writeFile(opt.scheduleOut, sched::scheduleReportJson(design, gs, sch, diags), out);

    if (!opt.verilogOut.empty() || !opt.netlistOut.empty()) {
      rtl::Netlist nl = rtl::buildNetlist(design, sch);
      if (!opt.verilogOut.empty()) writeFile(opt.verilogOut, rtl::verilogText(nl), out);
      if (!opt.netlistOut.empty()) writeFile(opt.netlistOut, rtl::netlistJson(nl), out);
    }

    if (!opt.simulate) return 0;

    sim::Options so;
    so.maxCycles = opt.maxCycles;
    so.checkAtomicity = opt.checkAtomicity;
    so.captureSignals = !opt.vcdOut.empty();
    so.display = &out;
    sim::Trace trace = sim::simulate(design, sch, so);
    if (!opt.vcdOut.empty()) writeFile(opt.vcdOut, sim::vcdDocument(design, trace), out);
    if (!opt.traceOut.empty()) writeFile(opt.traceOut, traceJson(design, trace, opt.relaxed), out);
    if (trace.timedOut) {
      err << "error: no $finish within " << opt.maxCycles << " cycles\n";
      return 124;
    }
    return trace.exitCode;
  } catch (const CompileError& e) {
    err << e.render() << "\n";
    return 1;
  } catch (const sim::SimError& e) {
    err << "simulation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace bluec
