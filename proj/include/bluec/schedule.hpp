#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bluec/core.hpp"
#include "bluec/diag.hpp"
#include "bluec/guards.hpp"

namespace bluec::sched {

// The static schedule: conflict classes, per-class priority and composition
// orders, exclusivity facts, and the CAN_FIRE / WILL_FIRE expressions the
// simulator and the netlist backend share.
struct Schedule {
  bool relaxed = false;

  std::vector<int> classOf;                   // rule index -> class id
  std::vector<std::vector<int>> classes;      // class -> members, highest priority first
  std::vector<std::vector<int>> composition;  // class -> members in execution (composition) order
  std::vector<std::vector<std::string>> classResources;  // shared methods, for reports

  std::set<std::pair<int, int>> exclusive;    // unordered within-class pairs, stored (min,max)
  std::vector<std::vector<int>> suppressors;  // per rule: higher-priority conflicting rules

  std::vector<core::ExprPtr> canFire;         // per rule: composite guard
  std::vector<core::ExprPtr> willFire;        // per rule: grant

  bool exclusivePair(int a, int b) const {
    return exclusive.count({std::min(a, b), std::max(a, b)}) != 0;
  }
};

// Builds the schedule.  Throws CompileError on priority cycles and on
// fire_when_enabled rules that can be suppressed; dead-rule findings are
// reported through diags.
Schedule buildSchedule(const core::Design& design, const guards::GuardSet& gs,
                       bool relaxedWrites, Diagnostics& diags);

// JSON document describing classes, priorities, grants, exclusivity facts and
// warnings.
std::string scheduleReportJson(const core::Design& design, const guards::GuardSet& gs,
                               const Schedule& s, const Diagnostics& diags);

}  // namespace bluec::sched
