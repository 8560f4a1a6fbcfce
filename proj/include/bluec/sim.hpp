#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bluec/core.hpp"
#include "bluec/schedule.hpp"

namespace bluec::sim {

struct CycleRecord {
  uint64_t cycle = 0;
  std::vector<std::string> fired;             // rule names in execution order
  std::vector<std::string> displays;          // $display output, in emission order
  std::map<std::string, uint64_t> registers;  // register path -> value after the cycle
  bool finished = false;
  uint64_t finishCode = 0;
};

struct Trace {
  std::vector<CycleRecord> cycles;
  bool finished = false;
  int exitCode = 0;     // $finish argument
  bool timedOut = false;

  // Present when signal capture is on: one sample per cycle plus a final
  // post-commit sample; widths cover every sampled signal.
  std::vector<std::map<std::string, uint64_t>> samples;
  std::map<std::string, int> signalWidths;
};

struct Options {
  uint64_t maxCycles = 10000;
  bool checkAtomicity = true;      // audit each cycle against a sequential witness
  unsigned permutationLimit = 720; // sampled witnesses when the fired set is large
  unsigned seed = 1;
  bool captureSignals = false;     // fill Trace::samples for waveform output
  std::ostream* display = nullptr; // $display sink; null discards the text
};

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Trace simulate(const core::Design& design, const sched::Schedule& sched, const Options& opt);

// Value-change-dump text for a captured trace.
std::string vcdDocument(const core::Design& design, const Trace& trace);

}  // namespace bluec::sim
