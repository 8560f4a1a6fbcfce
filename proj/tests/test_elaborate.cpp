#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <set>
#include <string>

#include "bluec/driver.hpp"
#include "helpers.hpp"
#include "vendor/doctest.h"

using namespace bluec;
using testutil::compileFile;
using testutil::compileSource;

static core::Design elab(const std::string& text, const std::string& top = "",
                         core::GuardMode mode = core::GuardMode::Strict) {
  auto unit = desugarSugar(parseSource("t.bsv", text));
  return elaborate(unit, testutil::pickTop(unit, top), mode);
}

static std::vector<std::string> corpusFiles() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(BLUEC_CORPUS_DIR))
    if (e.path().extension() == ".bsv") out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

TEST_CASE("register constructors carry width and reset") {
  auto d = elab(
      "module top ();\n"
      "  Reg#(UInt(8)) a <- mkReg(23);\n"
      "  Reg#(UInt(16)) b <- mk_register('h10);\n"
      "  Reg#(int) c <- mkReg(0);\n"
      "  Reg#(Bool) f <- mkReg(True);\n"
      "endmodule\n");
  REQUIRE(d.instances.size() == 4);
  const auto* a = d.instance("a");
  CHECK(a->kind == core::PrimKind::Register);
  CHECK(a->width == 8);
  CHECK(a->reset == 23);
  CHECK(d.instance("b")->width == 16);
  CHECK(d.instance("b")->reset == 16);
  CHECK(d.instance("c")->width == 32);
  CHECK(d.instance("f")->width == 1);
  CHECK(d.instance("f")->reset == 1);
}

TEST_CASE("queue and ram constructors") {
  auto d = elab(
      "module top ();\n"
      "  FIFO#(UInt(8)) f <- mkFIFO;\n"
      "  Pipe#(UInt(12)) p <- mkPipe;\n"
      "  SyncRAM#(UInt(16)) m <- mkSyncRAM(3);\n"
      "endmodule\n");
  CHECK(d.instance("f")->kind == core::PrimKind::Fifo);
  CHECK(d.instance("f")->width == 8);
  CHECK(d.instance("p")->kind == core::PrimKind::Pipe);
  CHECK(d.instance("p")->depth == 2);
  const auto* m = d.instance("m");
  CHECK(m->kind == core::PrimKind::SyncRam);
  CHECK(m->addrWidth == 3);
  CHECK(m->depth == 8);
  CHECK(m->width == 16);
}

TEST_CASE("hierarchy flattens to dotted paths and qualified rule names") {
  auto p = compileFile("hier.bsv");
  std::set<std::string> paths;
  for (const auto& i : p.design.instances) paths.insert(i.path);
  CHECK(paths.count("stage1.c"));
  CHECK(paths.count("stage2.c"));
  CHECK(p.design.ruleIndex("stage1.tick") >= 0);
  CHECK(p.design.ruleIndex("stage2.tick") >= 0);
}

TEST_CASE("instance paths are unique across nesting") {
  auto d = elab(
      "module leaf ();\n"
      "  Reg#(UInt(4)) r <- mkReg(0);\n"
      "  rule t; r <= r + 1; endrule\n"
      "endmodule\n"
      "module mid ();\n"
      "  Empty a <- leaf;\n"
      "  Empty b <- leaf;\n"
      "endmodule\n"
      "module top ();\n"
      "  Empty u <- mid;\n"
      "  Empty v <- mid;\n"
      "endmodule\n",
      "top");
  std::set<std::string> paths;
  for (const auto& i : d.instances) {
    CHECK(!paths.count(i.path));
    paths.insert(i.path);
  }
  CHECK(paths == std::set<std::string>{"u.a.r", "u.b.r", "v.a.r", "v.b.r"});
  CHECK(d.rules.size() == 4);
  CHECK(d.ruleIndex("v.b.t") >= 0);
}

TEST_CASE("flatness: every call site resolves to a primitive method") {
  for (const auto& name : corpusFiles()) {
    CAPTURE(name);
    auto p = compileFile(name);
    for (const auto& r : p.design.rules)
      for (const auto& a : r.actions) {
        if (a.kind != core::Action::Kind::Call) continue;
        const auto* inst = p.design.instance(a.path);
        REQUIRE(inst != nullptr);
        REQUIRE(inst->method(a.method) != nullptr);
      }
  }
}

TEST_CASE("elaboration is deterministic") {
  for (const auto& name : corpusFiles()) {
    CAPTURE(name);
    auto src = testutil::readFile(testutil::corpusPath(name));
    auto unit = desugarSugar(parseSource(name, src));
    auto top = testutil::pickTop(unit, "");
    auto d1 = elaborate(unit, top, core::GuardMode::Strict);
    auto d2 = elaborate(unit, top, core::GuardMode::Strict);
    CHECK(designJson(d1) == designJson(d2));
  }
}

TEST_CASE("user methods are inlined with their guards inherited") {
  auto p = compileFile("methods.bsv");
  // Only primitive instances survive; the user interface leaves no trace.
  for (const auto& i : p.design.instances)
    CHECK((i.kind == core::PrimKind::Register || i.kind == core::PrimKind::Fifo ||
           i.kind == core::PrimKind::Pipe || i.kind == core::PrimKind::SyncRam));
  int feed = p.design.ruleIndex("feed");
  REQUIRE(feed >= 0);
  const auto& rule = p.design.rules[static_cast<size_t>(feed)];
  REQUIRE(!rule.inheritedGuards.empty());
  CHECK(core::exprStr(rule.inheritedGuards[0].guard).find("sum._read()") != std::string::npos);
}

TEST_CASE("static parameters specialise each instantiation") {
  auto d = elab(
      "interface Count;\n"
      "  method UInt(8) now();\n"
      "endinterface\n"
      "module mkCount #(int stride) (Count);\n"
      "  Reg#(UInt(8)) c <- mkReg(0);\n"
      "  rule tick; c <= c + stride; endrule\n"
      "  method UInt(8) now();\n"
      "    return c;\n"
      "  endmethod\n"
      "endmodule\n"
      "module top ();\n"
      "  Count one <- mkCount(1);\n"
      "  Count ten <- mkCount(10);\n"
      "  rule watch (one.now() == 200); $finish(0); endrule\n"
      "endmodule\n",
      "top");
  int t1 = d.ruleIndex("one.tick");
  int t2 = d.ruleIndex("ten.tick");
  REQUIRE(t1 >= 0);
  REQUIRE(t2 >= 0);
  auto arg = [&](int ri) {
    for (const auto& a : d.rules[static_cast<size_t>(ri)].actions)
      if (a.method == "_write") return core::exprStr(a.args[0]);
    return std::string();
  };
  CHECK(arg(t1) != arg(t2));
  CHECK(arg(t1).find("1") != std::string::npos);
  CHECK(arg(t2).find("10") != std::string::npos);
}

TEST_CASE("module-level static if selects instantiations") {
  auto d = elab(
      "module top ();\n"
      "  Reg#(UInt(8)) x <- mkReg(0);\n"
      "  if (2 > 1)\n"
      "    Reg#(UInt(8)) y <- mkReg(1);\n"
      "  else\n"
      "    Reg#(UInt(8)) z <- mkReg(2);\n"
      "  rule r; x <= x + y; endrule\n"
      "endmodule\n");
  CHECK(d.instance("y") != nullptr);
  CHECK(d.instance("z") == nullptr);
}

TEST_CASE("sequencer desugars into one rule per state") {
  auto p = compileFile("fsm_seq.bsv");
  const auto* state = p.design.instance("fsm0");
  REQUIRE(state != nullptr);
  CHECK(state->kind == core::PrimKind::Register);
  CHECK(state->width == 2);  // four states: three steps plus parked
  CHECK(state->reset == 0);
  std::vector<int> machineRules;
  for (size_t k = 0; k < p.design.rules.size(); ++k)
    if (p.design.rules[k].name.rfind("fsm0_", 0) == 0)
      machineRules.push_back(static_cast<int>(k));
  CHECK(machineRules.size() == 3);
  // Distinct state values make the generated guards pairwise exclusive,
  // which the clause analysis can prove on its own.
  for (size_t a = 0; a < machineRules.size(); ++a)
    for (size_t b = a + 1; b < machineRules.size(); ++b)
      CHECK(guards::mutuallyExclusive(
          p.gs.guards[static_cast<size_t>(machineRules[a])].cnf,
          p.gs.guards[static_cast<size_t>(machineRules[b])].cnf));
}

TEST_CASE("every machine in the corpus yields exclusive state rules") {
  // Parallel arms are machines of their own; exclusivity is a per-state-
  // register fact, so rules are grouped by everything before the _sN tail.
  for (const auto& name : {"fsm_loop.bsv", "fsm_parbrk.bsv", "mixed.bsv"}) {
    INFO("design: " << std::string(name));
    auto p = compileFile(name);
    std::map<std::string, std::vector<size_t>> machines;
    for (size_t k = 0; k < p.design.rules.size(); ++k) {
      const auto& rn = p.design.rules[k].name;
      if (rn.rfind("fsm", 0) != 0) continue;
      machines[rn.substr(0, rn.rfind("_s"))].push_back(k);
    }
    REQUIRE(!machines.empty());
    for (const auto& [reg, machine] : machines)
      for (size_t a = 0; a < machine.size(); ++a)
        for (size_t b = a + 1; b < machine.size(); ++b) {
          CAPTURE(p.design.rules[machine[a]].name);
          CAPTURE(p.design.rules[machine[b]].name);
          CHECK(guards::mutuallyExclusive(p.gs.guards[machine[a]].cnf,
                                          p.gs.guards[machine[b]].cnf));
        }
  }
}

TEST_CASE("case arms record disjoint branch conditions") {
  auto d = elab(
      "module top ();\n"
      "  Reg#(UInt(8)) s <- mkReg(0);\n"
      "  Reg#(UInt(8)) a <- mkReg(0);\n"
      "  rule step;\n"
      "    case (s)\n"
      "      0: a <= 1;\n"
      "      1: a <= 2;\n"
      "      default: a <= 3;\n"
      "    endcase\n"
      "    s <= s + 1;\n"
      "  endrule\n"
      "endmodule\n");
  const auto& rule = d.rules[0];
  std::vector<const core::Action*> writes;
  for (const auto& act : rule.actions)
    if (act.method == "_write" && act.path == "a") writes.push_back(&act);
  REQUIRE(writes.size() == 3);
  // First arm: one positive equality. Second: one miss plus its own hit.
  // Default: both misses.
  CHECK(writes[0]->whenParts.size() == 1);
  CHECK(writes[0]->whenParts[0].second == true);
  CHECK(writes[1]->whenParts.size() == 2);
  CHECK(writes[1]->whenParts[0].second == false);
  CHECK(writes[1]->whenParts[1].second == true);
  CHECK(writes[2]->whenParts.size() == 2);
  CHECK(writes[2]->whenParts[0].second == false);
  CHECK(writes[2]->whenParts[1].second == false);
}

TEST_CASE("elaboration errors carry locations and name the fault") {
  auto fails = [&](const std::string& text, const std::string& needle) {
    try {
      elab(text);
      FAIL_CHECK("expected a compile error for: " << needle);
    } catch (const CompileError& e) {
      INFO("message: " << e.what());
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
      CHECK(e.loc.valid());
    }
  };
  fails("module top ();\n  Reg#(UInt(8)) x <- mkReg(0);\n  Reg#(UInt(8)) x <- mkReg(1);\nendmodule\n",
        "duplicate name");
  fails("module top ();\n  Reg#(UInt(8)) x <- mkReg(0);\n  rule a (firing(nosuch)); x <= 1; endrule\nendmodule\n",
        "unknown rule");
  fails("module top ();\n  FIFO#(UInt(8)) f <- mkFIFO;\n  rule a; f.enq(1, 2); endrule\nendmodule\n",
        "takes 1 argument");
  fails("module top ();\n  FIFO#(UInt(8)) f <- mkFIFO;\n  rule a; f.pop(); endrule\nendmodule\n",
        "no method");
  fails("module top ();\n  Reg#(UInt(8)) x <- mkReg(0);\n  rule r (x < 250);\n    x <= x + 1;\n    x <= x * 2;\n  endrule\nendmodule\n",
        "more than once");
  fails("module top ();\n  rule r; y <= 1; endrule\nendmodule\n", "");
}

TEST_CASE("exclusive branches may both write one register") {
  auto d = elab(
      "module top ();\n"
      "  Reg#(UInt(8)) x <- mkReg(0);\n"
      "  rule r;\n"
      "    if (x < 5)\n"
      "      x <= x + 1;\n"
      "    else\n"
      "      x <= 0;\n"
      "  endrule\n"
      "endmodule\n");
  int writes = 0;
  for (const auto& a : d.rules[0].actions)
    if (a.method == "_write") ++writes;
  CHECK(writes == 2);
}
