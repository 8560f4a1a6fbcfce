#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bluec/core.hpp"
#include "bluec/schedule.hpp"

namespace bluec::rtl {

// A combinational net.  Registers appear as nets without a driver; their
// value is the flop output.
struct Net {
  std::string name;
  int width = 1;
  core::ExprPtr driver;  // expression over Net references; null for flop outputs
};

struct RegSpec {
  std::string name;  // flop output net name
  int q = -1;        // net ids
  int enable = -1;
  int data = -1;
  int width = 1;
  uint64_t reset = 0;
};

struct Netlist {
  std::string top;
  std::vector<Net> nets;
  std::vector<RegSpec> regs;
  std::map<std::string, int> regForPath;  // register instance path -> regs index
  std::vector<int> topoOrder;             // driven nets in dependency order
};

// Lowers the scheduled design to a flat netlist.  Throws CompileError when
// the combinational logic contains a cycle (the message names the nets).
Netlist buildNetlist(const core::Design& design, const sched::Schedule& sched);

// Synchronous Verilog-2001 text for the netlist: input clk, input rst,
// active-high synchronous reset.
std::string verilogText(const Netlist& nl);

std::string netlistJson(const Netlist& nl);

// Clock the netlist for the given number of cycles.  Each entry maps the
// original register instance path to the flop value after that cycle's edge,
// matching the simulator's per-cycle register records.
std::vector<std::map<std::string, uint64_t>> runNetlist(const Netlist& nl, size_t cycles);

}  // namespace bluec::rtl
