#pragma once

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "bluec/core.hpp"
#include "bluec/sim.hpp"

namespace bluec {

struct DriverOptions {
  std::vector<std::string> files;
  std::string top;

  bool simulate = false;
  uint64_t maxCycles = 10000;
  bool relaxed = false;     // allow several rules to write one register per cycle
  bool nonStrict = false;   // guard semantics
  bool checkAtomicity = true;

  std::string verilogOut;
  std::string vcdOut;
  std::string traceOut;
  std::string scheduleOut;
  std::string netlistOut;
  bool dumpCore = false;
  bool dumpGuards = false;

  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
};

// Runs the full pipeline per the options. Returns the process exit code:
// 0 success (or the $finish code), 1 compile or simulation error, 124 when
// --simulate hits --max-cycles without $finish.
int runDriver(const DriverOptions& opt);

// JSON renderings used by the driver and by tests.
std::string designJson(const core::Design& design);
std::string traceJson(const core::Design& design, const sim::Trace& trace, bool relaxed);

}  // namespace bluec
