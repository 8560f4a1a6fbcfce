#include "bluec/primitives.hpp"

#include <algorithm>
#include <stdexcept>

namespace bluec::prim {

using core::Instance;
using core::MethodSpec;
using core::PrimKind;
using core::Protocol;

static uint64_t maskTo(uint64_t v, int width) {
  if (width >= 64) return v;
  return v & ((uint64_t{1} << width) - 1);
}

Instance makeRegister(std::string path, int width, uint64_t reset, SourceLoc loc) {
  Instance inst;
  inst.path = std::move(path);
  inst.kind = PrimKind::Register;
  inst.width = width;
  inst.reset = maskTo(reset, width);
  inst.loc = loc;
  inst.methods.push_back(MethodSpec{"_read", Protocol::Value, true, {}, width});
  inst.methods.push_back(MethodSpec{"_write", Protocol::Action, true, {width}, 0});
  return inst;
}

Instance makeFifo(std::string path, int width, int depth, SourceLoc loc) {
  if (depth < 1) throw CompileError(loc, "fifo depth must be at least 1");
  Instance inst;
  inst.path = std::move(path);
  inst.kind = PrimKind::Fifo;
  inst.width = width;
  inst.depth = depth;
  inst.loc = loc;
  inst.methods.push_back(MethodSpec{"enq", Protocol::Action, false, {width}, 0});
  inst.methods.push_back(MethodSpec{"deq", Protocol::Action, false, {}, 0});
  inst.methods.push_back(MethodSpec{"first", Protocol::Value, false, {}, width});
  return inst;
}

Instance makePipe(std::string path, int width, SourceLoc loc) {
  Instance inst;
  inst.path = std::move(path);
  inst.kind = PrimKind::Pipe;
  inst.width = width;
  inst.depth = 2;
  inst.loc = loc;
  inst.methods.push_back(MethodSpec{"send", Protocol::Action, false, {width}, 0});
  inst.methods.push_back(MethodSpec{"receive", Protocol::ActionValue, false, {}, width});
  return inst;
}

Instance makeSyncRam(std::string path, int width, int addrWidth, SourceLoc loc) {
  if (addrWidth < 1 || addrWidth > 20)
    throw CompileError(loc, "ram address width must be in 1..20");
  Instance inst;
  inst.path = std::move(path);
  inst.kind = PrimKind::SyncRam;
  inst.width = width;
  inst.addrWidth = addrWidth;
  inst.depth = 1 << addrWidth;
  inst.loc = loc;
  inst.methods.push_back(MethodSpec{"put", Protocol::Action, true, {addrWidth, width}, 0});
  inst.methods.push_back(MethodSpec{"get", Protocol::ActionValue, false, {}, width});
  return inst;
}

State initialState(const Instance& inst) {
  State st;
  switch (inst.kind) {
    case PrimKind::Register:
      st.reg = inst.reset;
      break;
    case PrimKind::Fifo:
    case PrimKind::Pipe:
      break;
    case PrimKind::SyncRam:
      st.mem.assign(static_cast<size_t>(inst.depth), 0);
      break;
  }
  return st;
}

bool methodReady(const Instance& inst, const State& st, const std::string& method) {
  switch (inst.kind) {
    case PrimKind::Register:
      return true;
    case PrimKind::Fifo:
      if (method == "enq") return static_cast<int>(st.queue.size()) < inst.depth;
      if (method == "deq" || method == "first") return !st.queue.empty();
      break;
    case PrimKind::Pipe:
      if (method == "send") return static_cast<int>(st.queue.size()) < inst.depth;
      if (method == "receive") return !st.queue.empty();
      break;
    case PrimKind::SyncRam:
      if (method == "put") return true;
      if (method == "get") return st.pendValid;
      break;
  }
  throw std::logic_error("methodReady: unknown method " + inst.path + "." + method);
}

uint64_t methodResult(const Instance& inst, const State& st, const std::string& method) {
  switch (inst.kind) {
    case PrimKind::Register:
      if (method == "_read") return st.reg;
      break;
    case PrimKind::Fifo:
      if (method == "first") {
        if (st.queue.empty()) throw std::logic_error("first on empty fifo " + inst.path);
        return st.queue.front();
      }
      break;
    case PrimKind::Pipe:
      if (method == "receive") {
        if (st.queue.empty()) throw std::logic_error("receive on empty pipe " + inst.path);
        return st.queue.front();
      }
      break;
    case PrimKind::SyncRam:
      if (method == "get") {
        if (!st.pendValid) throw std::logic_error("get with no pending ram access " + inst.path);
        return st.pend;
      }
      break;
  }
  throw std::logic_error("methodResult: unknown method " + inst.path + "." + method);
}

std::optional<uint64_t> applyCall(const Instance& inst, State& st, const Call& call) {
  auto needArgs = [&](size_t n) {
    if (call.args.size() != n)
      throw std::logic_error("applyCall: bad arg count for " + inst.path + "." + call.method);
  };
  switch (inst.kind) {
    case PrimKind::Register:
      if (call.method == "_write") {
        needArgs(1);
        st.reg = maskTo(call.args[0], inst.width);
        return std::nullopt;
      }
      if (call.method == "_read") return st.reg;
      break;
    case PrimKind::Fifo:
      if (call.method == "enq") {
        needArgs(1);
        if (static_cast<int>(st.queue.size()) >= inst.depth)
          throw std::logic_error("applyCall: enq on full fifo " + inst.path);
        st.queue.push_back(maskTo(call.args[0], inst.width));
        return std::nullopt;
      }
      if (call.method == "deq") {
        if (st.queue.empty()) throw std::logic_error("applyCall: deq on empty fifo " + inst.path);
        st.queue.pop_front();
        return std::nullopt;
      }
      if (call.method == "first") {
        if (st.queue.empty()) throw std::logic_error("applyCall: first on empty fifo " + inst.path);
        return st.queue.front();
      }
      break;
    case PrimKind::Pipe:
      if (call.method == "send") {
        needArgs(1);
        if (static_cast<int>(st.queue.size()) >= inst.depth)
          throw std::logic_error("applyCall: send on full pipe " + inst.path);
        st.queue.push_back(maskTo(call.args[0], inst.width));
        return std::nullopt;
      }
      if (call.method == "receive") {
        if (st.queue.empty())
          throw std::logic_error("applyCall: receive on empty pipe " + inst.path);
        uint64_t v = st.queue.front();
        st.queue.pop_front();
        return v;
      }
      break;
    case PrimKind::SyncRam:
      if (call.method == "put") {
        needArgs(2);
        uint64_t addr = maskTo(call.args[0], inst.addrWidth);
        st.mem[static_cast<size_t>(addr)] = maskTo(call.args[1], inst.width);
        st.pend = st.mem[static_cast<size_t>(addr)];
        st.pendValid = true;
        return std::nullopt;
      }
      if (call.method == "get") {
        if (!st.pendValid) throw std::logic_error("applyCall: get with no pending ram read");
        st.pendValid = false;
        return st.pend;
      }
      break;
  }
  throw std::logic_error("applyCall: unknown method " + inst.path + "." + call.method);
}

// Canonical commit order per primitive: consumers drain before producers
// fill, so a simultaneous pop+push on a full queue succeeds.
static int commitRank(PrimKind kind, const std::string& method) {
  switch (kind) {
    case PrimKind::Register:
      return 0;
    case PrimKind::Fifo:
      return method == "deq" ? 0 : 1;
    case PrimKind::Pipe:
      return method == "receive" ? 0 : 1;
    case PrimKind::SyncRam:
      return method == "get" ? 0 : 1;
  }
  return 0;
}

void commitCalls(const Instance& inst, State& st, const std::vector<Call>& calls) {
  std::vector<const Call*> ordered;
  ordered.reserve(calls.size());
  for (const auto& c : calls) ordered.push_back(&c);
  std::stable_sort(ordered.begin(), ordered.end(), [&](const Call* a, const Call* b) {
    return commitRank(inst.kind, a->method) < commitRank(inst.kind, b->method);
  });
  for (size_t i = 1; i < ordered.size(); i++) {
    if (ordered[i]->method == ordered[i - 1]->method && inst.kind != PrimKind::Register)
      throw std::logic_error("commitCalls: method " + inst.path + "." + ordered[i]->method +
                             " enabled twice in one cycle");
  }
  for (const Call* c : ordered) applyCall(inst, st, *c);
}

}  // namespace bluec::prim
