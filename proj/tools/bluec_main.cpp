#include "vendor/CLI11.hpp"

#include "bluec/driver.hpp"

int main(int argc, char** argv) {
  CLI::App app{"bluec: rule-based hardware compiler and cycle simulator"};
  bluec::DriverOptions opt;

  app.add_option("files", opt.files, "input source files")->required();
  app.add_option("--top", opt.top, "top module name (defaults to the only module)");

  app.add_flag("--simulate", opt.simulate, "run the cycle simulator");
  app.add_option("--max-cycles", opt.maxCycles, "simulation cycle limit")
      ->default_val(uint64_t{10000});

  std::string guardSemantics = "strict";
  app.add_option("--guard-semantics", guardSemantics, "strict | non-strict")
      ->check(CLI::IsMember({"strict", "non-strict"}));

  std::string multipleWrites = "disable";
  app.add_option("--bsv-enable-multiple-writes", multipleWrites,
                 "enable | disable several register writes per cycle")
      ->check(CLI::IsMember({"enable", "disable"}));
  bool relaxedFlag = false;
  app.add_flag("--relaxed", relaxedFlag, "shorthand for --bsv-enable-multiple-writes=enable");

  bool noAtomicity = false;
  app.add_flag("--no-atomicity-check", noAtomicity, "skip the per-cycle serialisation audit");

  app.add_option("-o,--verilog", opt.verilogOut, "write synthesisable Verilog ('-' for stdout)");
  app.add_option("--vcd", opt.vcdOut, "write a waveform dump");
  app.add_option("--trace", opt.traceOut, "write the cycle trace as JSON ('-' for stdout)");
  app.add_option("--schedule-report", opt.scheduleOut, "write the schedule as JSON ('-' for stdout)");
  app.add_option("--netlist-json", opt.netlistOut, "write the netlist as JSON ('-' for stdout)");
  app.add_flag("--dump-core", opt.dumpCore, "print the elaborated design as JSON");
  app.add_flag("--dump-guards", opt.dumpGuards, "print composite guards and their clause forms");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  opt.nonStrict = guardSemantics == "non-strict";
  opt.relaxed = relaxedFlag || multipleWrites == "enable";
  opt.checkAtomicity = !noAtomicity;
  return bluec::runDriver(opt);
}
