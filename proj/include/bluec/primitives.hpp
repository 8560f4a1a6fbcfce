#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "bluec/core.hpp"
#include "bluec/diag.hpp"

namespace bluec::prim {

// Builds the primitive instance descriptor for a given constructor. Widths
// are in bits (1..64). Register: reset value. Fifo: capacity. Pipe: fixed
// capacity 2. SyncRam: 2^addrWidth words, one-cycle read latency.
core::Instance makeRegister(std::string path, int width, uint64_t reset, SourceLoc loc);
core::Instance makeFifo(std::string path, int width, int depth, SourceLoc loc);
core::Instance makePipe(std::string path, int width, SourceLoc loc);
core::Instance makeSyncRam(std::string path, int width, int addrWidth, SourceLoc loc);

// Run-time state of one primitive instance.
struct State {
  uint64_t reg = 0;                 // Register
  std::deque<uint64_t> queue;       // Fifo / Pipe contents, front = oldest
  std::vector<uint64_t> mem;        // SyncRam words
  bool pendValid = false;           // SyncRam response register
  uint64_t pend = 0;

  bool operator==(const State&) const = default;
};

State initialState(const core::Instance& inst);

// Ready predicates are functions of start-of-cycle state only.
bool methodReady(const core::Instance& inst, const State& st, const std::string& method);

// Result of a value or action-value method, evaluated against the given
// state. The caller must have checked readiness.
uint64_t methodResult(const core::Instance& inst, const State& st, const std::string& method);

// One method invocation to commit at the end of a cycle.
struct Call {
  std::string method;
  std::vector<uint64_t> args;
};

// Applies one cycle's worth of calls to a non-register primitive. Calls are
// applied in the primitive's canonical order: consumers before producers
// (deq/receive/get first, then enq/send/put), so a full queue that is popped
// this cycle frees a slot for the same cycle's push. At most one call per
// method per cycle; violations throw (the scheduler must prevent them).
void commitCalls(const core::Instance& inst, State& st, const std::vector<Call>& calls);

// Applies a single call immediately (sequential semantics, used by the
// serializability checker). Returns the action-value result, if any.
std::optional<uint64_t> applyCall(const core::Instance& inst, State& st, const Call& call);

}  // namespace bluec::prim
