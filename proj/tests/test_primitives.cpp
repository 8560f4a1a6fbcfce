#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <deque>
#include <random>
#include <vector>

#include "bluec/primitives.hpp"
#include "vendor/doctest.h"

using namespace bluec;
using prim::Call;

TEST_CASE("register descriptor") {
  auto r = prim::makeRegister("top.x", 8, 0x1f3, {});
  CHECK(r.kind == core::PrimKind::Register);
  CHECK(r.width == 8);
  CHECK(r.reset == 0xf3);  // reset masked to the declared width
  const auto* rd = r.method("_read");
  REQUIRE(rd != nullptr);
  CHECK(rd->protocol == core::Protocol::Value);
  CHECK(rd->alwaysReady);
  CHECK(rd->argWidths.empty());
  CHECK(rd->resultWidth == 8);
  const auto* wr = r.method("_write");
  REQUIRE(wr != nullptr);
  CHECK(wr->protocol == core::Protocol::Action);
  CHECK(wr->alwaysReady);
  CHECK(wr->argWidths == std::vector<int>{8});
}

TEST_CASE("fifo and pipe descriptors") {
  auto f = prim::makeFifo("f", 16, 3, {});
  CHECK(f.depth == 3);
  CHECK(!f.method("enq")->alwaysReady);
  CHECK(f.method("enq")->argWidths == std::vector<int>{16});
  CHECK(!f.method("deq")->alwaysReady);
  CHECK(f.method("deq")->argWidths.empty());
  CHECK(f.method("first")->protocol == core::Protocol::Value);
  CHECK(f.method("first")->resultWidth == 16);
  CHECK_THROWS_AS(prim::makeFifo("f", 16, 0, {}), CompileError);

  auto p = prim::makePipe("p", 8, {});
  CHECK(p.depth == 2);
  CHECK(p.method("send")->protocol == core::Protocol::Action);
  CHECK(p.method("receive")->protocol == core::Protocol::ActionValue);
  CHECK(p.method("receive")->resultWidth == 8);
}

TEST_CASE("ram descriptor") {
  auto m = prim::makeSyncRam("m", 16, 5, {});
  CHECK(m.depth == 32);
  CHECK(m.addrWidth == 5);
  CHECK(m.method("put")->alwaysReady);
  CHECK(m.method("put")->argWidths == std::vector<int>{5, 16});
  CHECK(!m.method("get")->alwaysReady);
  CHECK(m.method("get")->protocol == core::Protocol::ActionValue);
  CHECK_THROWS_AS(prim::makeSyncRam("m", 16, 0, {}), CompileError);
  CHECK_THROWS_AS(prim::makeSyncRam("m", 16, 21, {}), CompileError);
}

TEST_CASE("register state and write masking") {
  auto r = prim::makeRegister("x", 8, 23, {});
  auto st = prim::initialState(r);
  CHECK(st.reg == 23);
  CHECK(prim::methodReady(r, st, "_read"));
  CHECK(prim::methodReady(r, st, "_write"));
  CHECK(prim::methodResult(r, st, "_read") == 23);
  prim::applyCall(r, st, {"_write", {0x1ff}});
  CHECK(st.reg == 0xff);
  auto got = prim::applyCall(r, st, {"_read", {}});
  REQUIRE(got.has_value());
  CHECK(*got == 0xff);
}

TEST_CASE("register accepts several writes per cycle, last one wins") {
  auto r = prim::makeRegister("x", 8, 0, {});
  auto st = prim::initialState(r);
  prim::commitCalls(r, st, {{"_write", {3}}, {"_write", {7}}});
  CHECK(st.reg == 7);
}

TEST_CASE("fifo against a reference deque") {
  std::mt19937 rng(7);
  for (int depth = 1; depth <= 4; ++depth) {
    auto f = prim::makeFifo("f", 8, depth, {});
    auto st = prim::initialState(f);
    std::deque<uint64_t> model;
    uint64_t next = 1;
    for (int cycle = 0; cycle < 200; ++cycle) {
      // Readiness is a function of start-of-cycle state only.
      bool canEnq = prim::methodReady(f, st, "enq");
      bool canDeq = prim::methodReady(f, st, "deq");
      CHECK(canEnq == (model.size() < static_cast<size_t>(depth)));
      CHECK(canDeq == !model.empty());
      CHECK(prim::methodReady(f, st, "first") == !model.empty());
      if (canDeq) CHECK(prim::methodResult(f, st, "first") == model.front());

      std::vector<Call> calls;
      bool doDeq = canDeq && rng() % 2;
      bool doEnq = canEnq && rng() % 2;
      if (doEnq) calls.push_back({"enq", {next}});
      if (doDeq) calls.push_back({"deq", {}});
      prim::commitCalls(f, st, calls);
      if (doDeq) model.pop_front();
      if (doEnq) model.push_back(next++ & 0xff);

      REQUIRE(st.queue.size() == model.size());
      for (size_t k = 0; k < model.size(); ++k) CHECK(st.queue[k] == model[k]);
      CHECK(st.queue.size() <= static_cast<size_t>(depth));
    }
  }
}

TEST_CASE("fifo commit order drains before filling") {
  // With the queue full, a pop committed in the same cycle makes room for
  // the push: deq ranks before enq inside commitCalls.
  auto f = prim::makeFifo("f", 8, 2, {});
  auto st = prim::initialState(f);
  prim::commitCalls(f, st, {{"enq", {1}}});
  prim::commitCalls(f, st, {{"enq", {2}}});
  REQUIRE(st.queue.size() == 2);
  prim::commitCalls(f, st, {{"enq", {3}}, {"deq", {}}});
  REQUIRE(st.queue.size() == 2);
  CHECK(st.queue[0] == 2);
  CHECK(st.queue[1] == 3);
}

TEST_CASE("fifo misuse throws") {
  auto f = prim::makeFifo("f", 8, 1, {});
  auto st = prim::initialState(f);
  CHECK_THROWS_AS(prim::applyCall(f, st, {"deq", {}}), std::logic_error);
  CHECK_THROWS_AS(prim::methodResult(f, st, "first"), std::logic_error);
  prim::applyCall(f, st, {"enq", {5}});
  CHECK_THROWS_AS(prim::applyCall(f, st, {"enq", {6}}), std::logic_error);
  CHECK_THROWS_AS(prim::commitCalls(f, st, {{"deq", {}}, {"deq", {}}}), std::logic_error);
}

TEST_CASE("pipe behaves as a depth-2 queue with popping receive") {
  auto p = prim::makePipe("p", 8, {});
  auto st = prim::initialState(p);
  std::deque<uint64_t> model;
  std::mt19937 rng(11);
  uint64_t next = 10;
  for (int cycle = 0; cycle < 200; ++cycle) {
    bool canSend = prim::methodReady(p, st, "send");
    bool canRecv = prim::methodReady(p, st, "receive");
    CHECK(canSend == (model.size() < 2));
    CHECK(canRecv == !model.empty());

    std::vector<Call> calls;
    bool doRecv = canRecv && rng() % 2;
    bool doSend = canSend && rng() % 2;
    if (doSend) calls.push_back({"send", {next}});
    if (doRecv) {
      CHECK(prim::methodResult(p, st, "receive") == model.front());
      calls.push_back({"receive", {}});
    }
    prim::commitCalls(p, st, calls);
    if (doRecv) model.pop_front();
    if (doSend) model.push_back(next++ & 0xff);

    REQUIRE(st.queue.size() == model.size());
    for (size_t k = 0; k < model.size(); ++k) CHECK(st.queue[k] == model[k]);
  }
}

TEST_CASE("pipe receive pops the value it returns") {
  auto p = prim::makePipe("p", 8, {});
  auto st = prim::initialState(p);
  prim::applyCall(p, st, {"send", {42}});
  auto v = prim::applyCall(p, st, {"receive", {}});
  REQUIRE(v.has_value());
  CHECK(*v == 42);
  CHECK(st.queue.empty());
  CHECK_THROWS_AS(prim::applyCall(p, st, {"receive", {}}), std::logic_error);
}

TEST_CASE("ram put stores and pends, get drains the pending word") {
  auto m = prim::makeSyncRam("m", 16, 2, {});
  auto st = prim::initialState(m);
  CHECK(st.mem.size() == 4);
  CHECK(!prim::methodReady(m, st, "get"));
  CHECK_THROWS_AS(prim::applyCall(m, st, {"get", {}}), std::logic_error);

  prim::applyCall(m, st, {"put", {1, 0x1beef}});
  CHECK(st.mem[1] == 0xbeef);  // data masked to the word width
  CHECK(st.pendValid);
  CHECK(prim::methodReady(m, st, "get"));
  CHECK(prim::methodResult(m, st, "get") == 0xbeef);

  auto v = prim::applyCall(m, st, {"get", {}});
  REQUIRE(v.has_value());
  CHECK(*v == 0xbeef);
  CHECK(!st.pendValid);

  // Address wraps into the declared address width.
  prim::applyCall(m, st, {"put", {6, 7}});
  CHECK(st.mem[2] == 7);
}

TEST_CASE("ram same-cycle get then put keeps the response pending") {
  auto m = prim::makeSyncRam("m", 8, 2, {});
  auto st = prim::initialState(m);
  prim::commitCalls(m, st, {{"put", {0, 11}}});
  // get drains the old word first, then the new put re-arms the response.
  prim::commitCalls(m, st, {{"get", {}}, {"put", {1, 22}}});
  CHECK(st.pendValid);
  CHECK(st.pend == 22);
  CHECK(st.mem[0] == 11);
  CHECK(st.mem[1] == 22);
}

TEST_CASE("ram against a reference array") {
  auto m = prim::makeSyncRam("m", 8, 3, {});
  auto st = prim::initialState(m);
  std::vector<uint64_t> mem(8, 0);
  bool pendValid = false;
  uint64_t pend = 0;
  std::mt19937 rng(3);
  for (int cycle = 0; cycle < 300; ++cycle) {
    CHECK(prim::methodReady(m, st, "get") == pendValid);
    std::vector<Call> calls;
    bool doGet = pendValid && rng() % 2;
    bool doPut = rng() % 2;
    uint64_t addr = rng() % 8, data = rng() % 256;
    if (doGet) {
      CHECK(prim::methodResult(m, st, "get") == pend);
      calls.push_back({"get", {}});
    }
    if (doPut) calls.push_back({"put", {addr, data}});
    prim::commitCalls(m, st, calls);
    if (doGet) pendValid = false;
    if (doPut) {
      mem[addr] = data;
      pend = data;
      pendValid = true;
    }
    CHECK(st.pendValid == pendValid);
    if (pendValid) CHECK(st.pend == pend);
    for (size_t k = 0; k < 8; ++k) CHECK(st.mem[k] == mem[k]);
  }
}

TEST_CASE("readiness does not mutate state") {
  auto f = prim::makeFifo("f", 8, 2, {});
  auto st = prim::initialState(f);
  prim::applyCall(f, st, {"enq", {1}});
  auto before = st;
  (void)prim::methodReady(f, st, "enq");
  (void)prim::methodReady(f, st, "deq");
  (void)prim::methodResult(f, st, "first");
  CHECK(st == before);
}
