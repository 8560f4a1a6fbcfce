#include "bluec/netlist.hpp"

#include <algorithm>
#include <set>

#include "bluec/diag.hpp"

namespace bluec::rtl {

namespace {

uint64_t maskTo(uint64_t v, int width) {
  if (width >= 64) return v;
  return v & ((uint64_t{1} << width) - 1);
}

int bitsFor(uint64_t maxValue) {
  int w = 1;
  while (w < 64 && (uint64_t{1} << w) <= maxValue) ++w;
  return w;
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == '.') c = '_';
  return out;
}

class Builder {
 public:
  Builder(const core::Design& d, const sched::Schedule& s) : d_(d), s_(s) {}

  Netlist run() {
    nl_.top = sanitize(d_.top.empty() ? std::string("top") : d_.top);

    for (const auto& i : d_.instances) declareInstance(i);
    collectCallers();
    buildRuleLogic();
    buildMethodBuses();
    buildStateLogic();
    for (const auto& b : d_.buffers) {
      addNet(sanitize(b.name), b.expr->width, lower(b.expr, emptyCtx_, -1));
    }
    topoSort();
    return std::move(nl_);
  }

 private:
  using Ctx = std::map<std::string, int>;  // register path -> version net id

  int addNet(std::string name, int width, core::ExprPtr driver) {
    if (!names_.insert(name).second) {
      int k = 2;
      while (!names_.insert(name + "_" + std::to_string(k)).second) ++k;
      name += "_" + std::to_string(k);
    }
    nl_.nets.push_back({name, width, std::move(driver)});
    return static_cast<int>(nl_.nets.size() - 1);
  }

  core::ExprPtr ref(int net) const {
    return core::mkNet(net, nl_.nets[static_cast<size_t>(net)].name,
                       nl_.nets[static_cast<size_t>(net)].width);
  }

  core::ExprPtr constant(uint64_t v, int width) const { return core::mkConst(v, width); }

  // ---- declaration of primitive storage and interface nets ----

  void declareInstance(const core::Instance& i) {
    const std::string p = sanitize(i.path);
    switch (i.kind) {
      case core::PrimKind::Register: {
        int q = addNet(p, i.width, nullptr);
        regQ_[i.path] = q;
        nl_.regForPath[i.path] = static_cast<int>(nl_.regs.size());
        nl_.regs.push_back({nl_.nets[static_cast<size_t>(q)].name, q, -1, -1, i.width,
                            maskTo(i.reset, i.width)});
        regIndex_[i.path] = static_cast<int>(nl_.regs.size() - 1);
        break;
      }
      case core::PrimKind::Fifo:
      case core::PrimKind::Pipe: {
        QueueNets qn;
        qn.countWidth = bitsFor(static_cast<uint64_t>(i.depth));
        for (int k = 0; k < i.depth; ++k)
          qn.slots.push_back(addStorage(p + "_slot" + std::to_string(k), i.width, 0));
        qn.count = addStorage(p + "_count", qn.countWidth, 0);
        const char* deqM = i.kind == core::PrimKind::Fifo ? "deq" : "receive";
        const char* enqM = i.kind == core::PrimKind::Fifo ? "enq" : "send";
        // Readiness from the current occupancy.
        int notFull = addNet(p + "_" + enqM + "_RDY", 1,
                             core::mkBin(core::BinOp::Lt, ref(regQ(qn.count)),
                                         constant(static_cast<uint64_t>(i.depth), qn.countWidth)));
        int notEmpty = addNet(p + "_" + deqM + "_RDY", 1,
                              core::mkBin(core::BinOp::Gt, ref(regQ(qn.count)),
                                          constant(0, qn.countWidth)));
        rdy_[{i.path, enqM}] = notFull;
        rdy_[{i.path, deqM}] = notEmpty;
        if (i.kind == core::PrimKind::Fifo) {
          int firstRdy = addNet(p + "_first_RDY", 1,
                                core::mkBin(core::BinOp::Gt, ref(regQ(qn.count)),
                                            constant(0, qn.countWidth)));
          rdy_[{i.path, "first"}] = firstRdy;
          res_[{i.path, "first"}] = addNet(p + "_first_RES", i.width, ref(regQ(qn.slots[0])));
        } else {
          res_[{i.path, "receive"}] =
              addNet(p + "_receive_RES", i.width, ref(regQ(qn.slots[0])));
        }
        queues_[i.path] = qn;
        break;
      }
      case core::PrimKind::SyncRam: {
        RamNets rn;
        for (int k = 0; k < i.depth; ++k)
          rn.words.push_back(addStorage(p + "_mem" + std::to_string(k), i.width, 0));
        rn.pend = addStorage(p + "_pend", i.width, 0);
        rn.pendValid = addStorage(p + "_pendv", 1, 0);
        rdy_[{i.path, "get"}] = addNet(p + "_get_RDY", 1, ref(regQ(rn.pendValid)));
        res_[{i.path, "get"}] = addNet(p + "_get_RES", i.width, ref(regQ(rn.pend)));
        rams_[i.path] = rn;
        break;
      }
    }
  }

  // Internal storage element (fifo slot, ram word...) modelled as a register.
  std::string addStorage(const std::string& name, int width, uint64_t reset) {
    int q = addNet(name, width, nullptr);
    regQ_["\x01" + name] = q;  // storage paths are keyed separately from instances
    nl_.regs.push_back({nl_.nets[static_cast<size_t>(q)].name, q, -1, -1, width,
                        maskTo(reset, width)});
    regIndex_["\x01" + name] = static_cast<int>(nl_.regs.size() - 1);
    return "\x01" + name;
  }

  int regQ(const std::string& path) const { return regQ_.at(path); }

  // ---- caller inventory ----

  struct CallSite {
    int rule = -1;
    core::ExprPtr when;                // un-lowered enabling condition
    std::vector<core::ExprPtr> args;   // un-lowered
  };

  void collectCallers() {
    for (size_t r = 0; r < d_.rules.size(); ++r) {
      for (const auto& act : d_.rules[r].actions) {
        if (act.kind != core::Action::Kind::Call) continue;
        callers_[{act.path, act.method}].push_back(
            {static_cast<int>(r), act.when, act.args});
      }
    }
  }

  // ---- expression lowering ----

  core::ExprPtr lower(const core::ExprPtr& e, const Ctx& ctx, int rule) {
    using K = core::Expr::Kind;
    if (!e) return constant(1, 1);
    switch (e->kind) {
      case K::Const:
        return e;
      case K::Str:
        throw CompileError(e->loc, "string value reached the netlist backend");
      case K::Read: {
        const auto* i = d_.instance(e->path);
        if (i->kind == core::PrimKind::Register) {
          auto it = ctx.find(e->path);
          if (it != ctx.end()) return ref(it->second);
          return ref(regQ(e->path));
        }
        return ref(res_.at({e->path, e->method}));
      }
      case K::Ready:
        return ref(rdy_.at({e->path, e->method}));
      case K::Firing: {
        int r = d_.ruleIndex(e->rule);
        return ref(willFire_.at(r));
      }
      case K::Binding: {
        const auto& b = d_.rules[static_cast<size_t>(rule)].bindings[static_cast<size_t>(e->binding)];
        return ref(res_.at({b.path, b.method}));
      }
      case K::Un:
        return core::mkUn(e->un, lower(e->a, ctx, rule), e->loc);
      case K::Bin:
        return core::mkBin(e->bin, lower(e->a, ctx, rule), lower(e->b, ctx, rule), e->loc);
      case K::Mux:
        return core::mkMux(lower(e->c, ctx, rule), lower(e->a, ctx, rule),
                           lower(e->b, ctx, rule), e->loc);
      case K::Net:
        return e;
    }
    return e;
  }

  // ---- grants and, in relaxed mode, chained register versions ----

  void buildRuleLogic() {
    const size_t n = d_.rules.size();
    ruleCtx_.assign(n, {});
    canFire_.assign(n, -1);
    willFire_.assign(n, -1);

    // Grant nets exist before their drivers so that a guard may reference
    // firing(other_rule); a truly circular reference is caught by topoSort.
    for (size_t r = 0; r < n; ++r) {
      canFire_[r] = addNet("CAN_FIRE_" + sanitize(d_.rules[r].name), 1, nullptr);
      willFire_[r] = addNet("WILL_FIRE_" + sanitize(d_.rules[r].name), 1, nullptr);
    }

    if (!s_.relaxed) {
      for (size_t r = 0; r < n; ++r) {
        nl_.nets[static_cast<size_t>(canFire_[r])].driver =
            lower(s_.canFire[r], emptyCtx_, static_cast<int>(r));
      }
      for (size_t r = 0; r < n; ++r) {
        core::ExprPtr w = ref(canFire_[r]);
        core::ExprPtr block;
        for (int hi : s_.suppressors[r]) {
          auto c = ref(canFire_[static_cast<size_t>(hi)]);
          block = block ? core::mkBin(core::BinOp::Or, block, c) : c;
        }
        if (block) w = core::mkBin(core::BinOp::And, w, core::mkUn(core::UnOp::Not, block));
        nl_.nets[static_cast<size_t>(willFire_[r])].driver = std::move(w);
      }
      return;
    }

    // Relaxed: walk each class in composition order.  Rules read the version
    // of a register produced by the writers before them; a register's final
    // version feeds its flop.
    for (size_t ci = 0; ci < s_.composition.size(); ++ci) {
      Ctx version;
      for (int r : s_.composition[ci]) {
        size_t ri = static_cast<size_t>(r);
        ruleCtx_[ri] = version;
        nl_.nets[static_cast<size_t>(canFire_[ri])].driver = lower(s_.canFire[ri], version, r);
        core::ExprPtr w = ref(canFire_[ri]);
        core::ExprPtr block;
        for (int hi : s_.suppressors[ri]) {
          // The suppressor's guard is re-evaluated at this rule's position in
          // the chain, which keeps the logic acyclic.
          int c = addNet("CAN_FIRE_" + sanitize(d_.rules[static_cast<size_t>(hi)].name) +
                             "_at_" + sanitize(d_.rules[ri].name),
                         1, lower(s_.canFire[static_cast<size_t>(hi)], version, hi));
          auto cr = ref(c);
          block = block ? core::mkBin(core::BinOp::Or, block, cr) : cr;
        }
        if (block) w = core::mkBin(core::BinOp::And, w, core::mkUn(core::UnOp::Not, block));
        nl_.nets[static_cast<size_t>(willFire_[ri])].driver = std::move(w);

        int vn = 0;
        for (const auto& act : d_.rules[ri].actions) {
          if (act.kind != core::Action::Kind::Call || act.method != "_write") continue;
          const auto* i = d_.instance(act.path);
          if (!i || i->kind != core::PrimKind::Register) continue;
          auto sel = core::mkBin(core::BinOp::And, ref(willFire_[ri]),
                                 lower(act.when, version, r));
          auto data = lower(act.args[0], version, r);
          auto it = version.find(act.path);
          core::ExprPtr prev = it != version.end() ? ref(it->second) : ref(regQ(act.path));
          int v = addNet(sanitize(act.path) + "_after_" + sanitize(d_.rules[ri].name) +
                             (vn ? "_" + std::to_string(vn) : ""),
                         i->width, core::mkMux(sel, data, prev));
          ++vn;
          version[act.path] = v;
        }
      }
      for (const auto& [path, v] : version) finalVersion_[path] = v;
    }
  }

  // ---- enable and argument buses, register data paths ----

  struct LoweredCall {
    core::ExprPtr sel;                  // WILL_FIRE && when, lowered
    std::vector<core::ExprPtr> args;    // lowered
    int priorityRank = 0;
  };

  std::vector<LoweredCall> lowerCallers(const std::string& path, const std::string& method) {
    std::vector<LoweredCall> out;
    auto it = callers_.find({path, method});
    if (it == callers_.end()) return out;
    for (const auto& site : it->second) {
      size_t r = static_cast<size_t>(site.rule);
      LoweredCall lc;
      lc.sel = core::mkBin(core::BinOp::And, ref(willFire_[r]),
                           lower(site.when, ruleCtx_[r], site.rule));
      for (const auto& a : site.args) lc.args.push_back(lower(a, ruleCtx_[r], site.rule));
      lc.priorityRank = rankOf(site.rule);
      out.push_back(std::move(lc));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const LoweredCall& a, const LoweredCall& b) {
                       return a.priorityRank < b.priorityRank;
                     });
    return out;
  }

  int rankOf(int rule) const {
    int ci = s_.classOf[static_cast<size_t>(rule)];
    const auto& order = s_.classes[static_cast<size_t>(ci)];
    for (size_t k = 0; k < order.size(); ++k)
      if (order[k] == rule) return static_cast<int>(k);
    return 0;
  }

  core::ExprPtr orChain(const std::vector<core::ExprPtr>& xs) {
    core::ExprPtr out;
    for (const auto& x : xs) out = out ? core::mkBin(core::BinOp::Or, out, x) : x;
    return out ? out : constant(0, 1);
  }

  // Enable plus priority-muxed argument buses for one method.
  struct Bus {
    int en = -1;
    std::vector<int> args;
  };

  Bus buildBus(const core::Instance& i, const std::string& method) {
    const auto* m = i.method(method);
    auto calls = lowerCallers(i.path, method);
    std::vector<core::ExprPtr> sels;
    for (const auto& c : calls) sels.push_back(c.sel);
    Bus bus;
    bus.en = addNet(sanitize(i.path) + "_" + method + "_EN", 1, orChain(sels));
    for (size_t k = 0; k < m->argWidths.size(); ++k) {
      core::ExprPtr v = constant(0, m->argWidths[k]);
      for (auto it = calls.rbegin(); it != calls.rend(); ++it)
        v = core::mkMux(it->sel, it->args[k], v);
      bus.args.push_back(addNet(sanitize(i.path) + "_" + method + "_ARG" + std::to_string(k),
                                m->argWidths[k], v));
    }
    return bus;
  }

  void buildMethodBuses() {
    for (const auto& i : d_.instances) {
      switch (i.kind) {
        case core::PrimKind::Register:
          buses_[{i.path, "_write"}] = buildBus(i, "_write");
          break;
        case core::PrimKind::Fifo:
          buses_[{i.path, "enq"}] = buildBus(i, "enq");
          buses_[{i.path, "deq"}] = buildBus(i, "deq");
          break;
        case core::PrimKind::Pipe:
          buses_[{i.path, "send"}] = buildBus(i, "send");
          buses_[{i.path, "receive"}] = buildBus(i, "receive");
          break;
        case core::PrimKind::SyncRam:
          buses_[{i.path, "put"}] = buildBus(i, "put");
          buses_[{i.path, "get"}] = buildBus(i, "get");
          break;
      }
    }
  }

  void setRegInputs(const std::string& regPath, core::ExprPtr enable, core::ExprPtr data) {
    auto& rs = nl_.regs[static_cast<size_t>(regIndex_.at(regPath))];
    rs.enable = addNet(rs.name + "_EN", 1, std::move(enable));
    rs.data = addNet(rs.name + "_D", rs.width, std::move(data));
  }

  void buildStateLogic() {
    for (const auto& i : d_.instances) {
      const std::string p = sanitize(i.path);
      switch (i.kind) {
        case core::PrimKind::Register: {
          const auto& bus = buses_.at({i.path, "_write"});
          core::ExprPtr data;
          if (s_.relaxed) {
            auto it = finalVersion_.find(i.path);
            data = it != finalVersion_.end() ? ref(it->second) : ref(regQ(i.path));
          } else {
            // Standard mode fires at most one writer; the argument bus mux
            // already selects it.
            data = ref(bus.args[0]);
          }
          setRegInputs(i.path, ref(bus.en), std::move(data));
          break;
        }
        case core::PrimKind::Fifo:
        case core::PrimKind::Pipe: {
          const auto& qn = queues_.at(i.path);
          const char* deqM = i.kind == core::PrimKind::Fifo ? "deq" : "receive";
          const char* enqM = i.kind == core::PrimKind::Fifo ? "enq" : "send";
          auto deqEn = ref(buses_.at({i.path, deqM}).en);
          const auto& enqBus = buses_.at({i.path, enqM});
          auto enqEn = ref(enqBus.en);
          auto cnt = ref(regQ(qn.count));
          int cw = qn.countWidth;
          // Consume before fill: the occupancy after a pop decides where a
          // push lands.
          auto afterDeq = core::mkMux(deqEn, core::mkBin(core::BinOp::Sub, cnt, constant(1, cw)),
                                      cnt);
          auto nextCnt = core::mkMux(enqEn, core::mkBin(core::BinOp::Add, afterDeq,
                                                        constant(1, cw)),
                                     afterDeq);
          setRegInputs(qn.count, core::mkBin(core::BinOp::Or, deqEn, enqEn), nextCnt);
          for (size_t k = 0; k < qn.slots.size(); ++k) {
            auto cur = ref(regQ(qn.slots[k]));
            core::ExprPtr shifted = k + 1 < qn.slots.size() ? ref(regQ(qn.slots[k + 1])) : cur;
            auto base = core::mkMux(deqEn, shifted, cur);
            auto enqHere = core::mkBin(core::BinOp::And, enqEn,
                                       core::mkBin(core::BinOp::Eq, afterDeq,
                                                   constant(k, cw)));
            auto next = core::mkMux(enqHere, ref(enqBus.args[0]), base);
            setRegInputs(qn.slots[k], core::mkBin(core::BinOp::Or, deqEn, enqEn), next);
          }
          break;
        }
        case core::PrimKind::SyncRam: {
          const auto& rn = rams_.at(i.path);
          const auto& putBus = buses_.at({i.path, "put"});
          auto putEn = ref(putBus.en);
          auto getEn = ref(buses_.at({i.path, "get"}).en);
          auto addr = ref(putBus.args[0]);
          auto data = ref(putBus.args[1]);
          for (size_t k = 0; k < rn.words.size(); ++k) {
            auto sel = core::mkBin(core::BinOp::And, putEn,
                                   core::mkBin(core::BinOp::Eq, addr,
                                               constant(k, i.addrWidth)));
            setRegInputs(rn.words[k], sel, data);
          }
          // A put makes its word available next cycle; a lone get drains the
          // pending value.
          setRegInputs(rn.pend, putEn, data);
          setRegInputs(rn.pendValid, core::mkBin(core::BinOp::Or, putEn, getEn),
                       core::mkMux(putEn, constant(1, 1), constant(0, 1)));
          break;
        }
      }
    }
  }

  // ---- dependency order ----

  void collectRefs(const core::ExprPtr& e, std::vector<int>& out) const {
    if (!e) return;
    if (e->kind == core::Expr::Kind::Net) {
      out.push_back(e->binding);
      return;
    }
    for (const auto& a : e->args) collectRefs(a, out);
    collectRefs(e->a, out);
    collectRefs(e->b, out);
    collectRefs(e->c, out);
  }

  void topoSort() {
    const size_t n = nl_.nets.size();
    std::vector<int> state(n, 0);  // 0 new, 1 visiting, 2 done
    std::vector<int> stack;
    std::vector<int> order;

    // Iterative depth-first walk so deep mux chains cannot overflow the call
    // stack.
    std::vector<std::pair<int, size_t>> work;
    std::vector<std::vector<int>> deps(n);
    for (size_t k = 0; k < n; ++k)
      if (nl_.nets[k].driver) collectRefs(nl_.nets[k].driver, deps[k]);

    for (size_t root = 0; root < n; ++root) {
      if (state[root] != 0 || !nl_.nets[root].driver) continue;
      work.push_back({static_cast<int>(root), 0});
      state[root] = 1;
      stack.push_back(static_cast<int>(root));
      while (!work.empty()) {
        auto& [node, idx] = work.back();
        if (idx < deps[static_cast<size_t>(node)].size()) {
          int next = deps[static_cast<size_t>(node)][idx++];
          if (!nl_.nets[static_cast<size_t>(next)].driver) continue;  // flop output
          if (state[next] == 1) {
            std::string msg = "combinational cycle through";
            for (auto it = std::find(stack.begin(), stack.end(), next); it != stack.end(); ++it)
              msg += " " + nl_.nets[static_cast<size_t>(*it)].name;
            throw CompileError({}, msg);
          }
          if (state[next] == 0) {
            state[next] = 1;
            stack.push_back(next);
            work.push_back({next, 0});
          }
          continue;
        }
        state[node] = 2;
        order.push_back(node);
        stack.pop_back();
        work.pop_back();
      }
    }
    nl_.topoOrder = order;
  }

  struct QueueNets {
    std::vector<std::string> slots;  // storage keys
    std::string count;
    int countWidth = 1;
  };
  struct RamNets {
    std::vector<std::string> words;
    std::string pend, pendValid;
  };

  const core::Design& d_;
  const sched::Schedule& s_;
  Netlist nl_;
  std::set<std::string> names_;
  Ctx emptyCtx_;

  std::map<std::string, int> regQ_;      // instance path or storage key -> q net
  std::map<std::string, int> regIndex_;  // same keys -> regs index
  std::map<std::pair<std::string, std::string>, int> rdy_, res_;
  std::map<std::pair<std::string, std::string>, std::vector<CallSite>> callers_;
  std::map<std::pair<std::string, std::string>, Bus> buses_;
  std::map<std::string, QueueNets> queues_;
  std::map<std::string, RamNets> rams_;
  std::vector<int> canFire_, willFire_;
  std::vector<Ctx> ruleCtx_;
  std::map<std::string, int> finalVersion_;
};

uint64_t evalNet(const core::ExprPtr& e, const std::vector<uint64_t>& values) {
  using K = core::Expr::Kind;
  switch (e->kind) {
    case K::Const:
      return e->value;
    case K::Net:
      return values[static_cast<size_t>(e->binding)];
    case K::Un: {
      uint64_t a = evalNet(e->a, values);
      return e->un == core::UnOp::Not ? (a ? 0 : 1) : (a != 0 ? 1 : 0);
    }
    case K::Bin: {
      uint64_t a = evalNet(e->a, values);
      uint64_t b = evalNet(e->b, values);
      switch (e->bin) {
        case core::BinOp::Add: return maskTo(a + b, e->width);
        case core::BinOp::Sub: return maskTo(a - b, e->width);
        case core::BinOp::Mul: return maskTo(a * b, e->width);
        case core::BinOp::Lt: return a < b;
        case core::BinOp::Le: return a <= b;
        case core::BinOp::Gt: return a > b;
        case core::BinOp::Ge: return a >= b;
        case core::BinOp::Eq: return a == b;
        case core::BinOp::Ne: return a != b;
        case core::BinOp::And: return (a & b) & 1;
        case core::BinOp::Or: return (a | b) & 1;
      }
      return 0;
    }
    case K::Mux:
      return maskTo(evalNet(e->c, values) ? evalNet(e->a, values) : evalNet(e->b, values),
                    e->width);
    default:
      throw std::logic_error("unlowered expression in netlist evaluation");
  }
}

}  // namespace

Netlist buildNetlist(const core::Design& design, const sched::Schedule& sched) {
  Builder b(design, sched);
  return b.run();
}

std::vector<std::map<std::string, uint64_t>> runNetlist(const Netlist& nl, size_t cycles) {
  std::vector<uint64_t> values(nl.nets.size(), 0);
  std::vector<uint64_t> regs(nl.regs.size());
  for (size_t k = 0; k < nl.regs.size(); ++k) regs[k] = nl.regs[k].reset;

  std::vector<std::map<std::string, uint64_t>> out;
  for (size_t cyc = 0; cyc < cycles; ++cyc) {
    for (size_t k = 0; k < nl.regs.size(); ++k)
      values[static_cast<size_t>(nl.regs[k].q)] = regs[k];
    for (int id : nl.topoOrder) {
      const auto& net = nl.nets[static_cast<size_t>(id)];
      values[static_cast<size_t>(id)] = maskTo(evalNet(net.driver, values), net.width);
    }
    for (size_t k = 0; k < nl.regs.size(); ++k) {
      if (values[static_cast<size_t>(nl.regs[k].enable)] & 1)
        regs[k] = maskTo(values[static_cast<size_t>(nl.regs[k].data)], nl.regs[k].width);
    }
    std::map<std::string, uint64_t> snap;
    for (const auto& [path, idx] : nl.regForPath) snap[path] = regs[static_cast<size_t>(idx)];
    out.push_back(std::move(snap));
  }
  return out;
}

}  // namespace bluec::rtl
