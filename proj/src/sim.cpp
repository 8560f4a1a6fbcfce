#include "bluec/sim.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "bluec/primitives.hpp"

namespace bluec::sim {

namespace {

uint64_t maskTo(uint64_t v, int width) {
  if (width >= 64) return v;
  return v & ((uint64_t{1} << width) - 1);
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == '.') c = '_';
  return out;
}

using StateMap = std::map<std::string, prim::State>;
using Overlay = std::map<std::string, uint64_t>;  // chained register values (relaxed mode)

struct Ctx {
  const core::Design* d = nullptr;
  const StateMap* st = nullptr;
  const Overlay* overlay = nullptr;
  const std::vector<uint8_t>* firing = nullptr;
  const std::vector<uint64_t>* bindings = nullptr;
  const std::map<std::string, int>* ruleIds = nullptr;
};

const core::Instance& inst(const Ctx& c, const std::string& path) {
  const auto* i = c.d->instance(path);
  if (!i) throw SimError("unknown instance " + path);
  return *i;
}

uint64_t eval(const core::ExprPtr& e, const Ctx& c) {
  using K = core::Expr::Kind;
  if (!e) return 1;
  switch (e->kind) {
    case K::Const:
      return e->value;
    case K::Str:
      throw SimError("string used as a value");
    case K::Read: {
      const auto& i = inst(c, e->path);
      if (c.overlay && i.kind == core::PrimKind::Register && e->method == "_read") {
        auto it = c.overlay->find(e->path);
        if (it != c.overlay->end()) return it->second;
      }
      return prim::methodResult(i, c.st->at(e->path), e->method);
    }
    case K::Ready:
      return prim::methodReady(inst(c, e->path), c.st->at(e->path), e->method) ? 1 : 0;
    case K::Firing: {
      auto it = c.ruleIds->find(e->rule);
      if (it == c.ruleIds->end()) throw SimError("unknown rule in firing(): " + e->rule);
      return (*c.firing)[static_cast<size_t>(it->second)] ? 1 : 0;
    }
    case K::Binding:
      return (*c.bindings)[static_cast<size_t>(e->binding)];
    case K::Un: {
      uint64_t a = eval(e->a, c);
      return e->un == core::UnOp::Not ? (a ? 0 : 1) : (a != 0 ? 1 : 0);
    }
    case K::Bin: {
      // Boolean connectives short-circuit so branches whose readiness is only
      // required under the selecting condition are never touched.
      if (e->bin == core::BinOp::And) {
        if (!(eval(e->a, c) & 1)) return 0;
        return eval(e->b, c) & 1;
      }
      if (e->bin == core::BinOp::Or) {
        if (eval(e->a, c) & 1) return 1;
        return eval(e->b, c) & 1;
      }
      uint64_t a = eval(e->a, c);
      uint64_t b = eval(e->b, c);
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
        default: return 0;
      }
    }
    case K::Mux:
      return maskTo(eval(e->c, c) ? eval(e->a, c) : eval(e->b, c), e->width);
    case K::Net:
      throw SimError("netlist reference in behavioural evaluation");
  }
  return 0;
}

bool evalBool(const core::ExprPtr& e, const Ctx& c) { return eval(e, c) != 0; }

std::string formatDisplay(const std::vector<core::ExprPtr>& args, const Ctx& c) {
  auto decimal = [](uint64_t v) { return std::to_string(v); };
  auto hex = [](uint64_t v) {
    char buf[24];
    snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(v));
    return std::string(buf);
  };
  auto binary = [](uint64_t v, int width) {
    std::string s;
    for (int k = width - 1; k >= 0; --k) s += ((v >> k) & 1) ? '1' : '0';
    return s.empty() ? std::string("0") : s;
  };
  if (args.empty()) return "";
  if (args[0]->kind != core::Expr::Kind::Str) {
    std::string out;
    for (size_t i = 0; i < args.size(); ++i) {
      if (i) out += ' ';
      out += decimal(eval(args[i], c));
    }
    return out;
  }
  const std::string& f = args[0]->str;
  std::string out;
  size_t argi = 1;
  for (size_t i = 0; i < f.size(); ++i) {
    if (f[i] != '%') {
      out += f[i];
      continue;
    }
    size_t j = i + 1;
    bool zeroFlag = false;
    while (j < f.size() && f[j] >= '0' && f[j] <= '9') {
      if (f[j] == '0' && j == i + 1) zeroFlag = true;
      ++j;
    }
    if (j >= f.size()) {
      out += '%';
      break;
    }
    char spec = f[j];
    if (spec == '%') {
      out += '%';
      i = j;
      continue;
    }
    if (argi >= args.size()) {
      out += f.substr(i);
      break;
    }
    const auto& a = args[argi];
    switch (spec) {
      case 'd':
        out += decimal(eval(a, c));
        ++argi;
        break;
      case 'h':
      case 'x':
        out += hex(eval(a, c));
        ++argi;
        break;
      case 'b': {
        uint64_t v = eval(a, c);
        if (zeroFlag) {
          std::string bits;
          uint64_t t = v;
          do {
            bits += static_cast<char>('0' + (t & 1));
            t >>= 1;
          } while (t);
          std::reverse(bits.begin(), bits.end());
          out += bits;
        } else {
          out += binary(v, a->width);
        }
        ++argi;
        break;
      }
      case 's':
        out += a->kind == core::Expr::Kind::Str ? a->str : decimal(eval(a, c));
        ++argi;
        break;
      default:
        out += f.substr(i, j - i + 1);
        break;
    }
    i = j;
  }
  return out;
}

// Effects of one fired rule, evaluated against a fixed read context.
struct RuleEffects {
  std::map<std::string, std::vector<prim::Call>> calls;  // non-register primitive calls
  std::vector<std::pair<std::string, uint64_t>> regWrites;  // register path, value, action order
  std::vector<std::string> displays;
  std::set<std::pair<std::string, std::string>> enabled;  // (path, method) with strobe high
  bool finish = false;
  uint64_t finishCode = 0;
};

// Runs the actions of one rule.  Reads go through ctx (which may include a
// register overlay holding the chained writes of earlier rules); the rule's
// own writes are returned in the effects and never visible to itself.
RuleEffects runRule(const core::Rule& rule, Ctx ctx) {
  RuleEffects fx;
  std::vector<uint64_t> bindings(rule.bindings.size(), 0);
  ctx.bindings = &bindings;
  for (const auto& act : rule.actions) {
    if (!evalBool(act.when, ctx)) continue;
    if (act.kind == core::Action::Kind::Pli) {
      if (act.pli == "$display") {
        fx.displays.push_back(formatDisplay(act.args, ctx));
      } else if (act.pli == "$finish" && !fx.finish) {
        fx.finish = true;
        fx.finishCode = act.args.empty() ? 0 : eval(act.args[0], ctx);
      }
      continue;
    }
    const auto& i = inst(ctx, act.path);
    const auto* m = i.method(act.method);
    std::vector<uint64_t> argv;
    for (size_t k = 0; k < act.args.size(); ++k)
      argv.push_back(maskTo(eval(act.args[k], ctx), m->argWidths[k]));
    fx.enabled.insert({act.path, act.method});
    if (i.kind == core::PrimKind::Register && act.method == "_write") {
      fx.regWrites.emplace_back(act.path, argv[0]);
    } else {
      if (act.resultBinding >= 0) {
        bindings[static_cast<size_t>(act.resultBinding)] =
            prim::methodResult(i, ctx.st->at(act.path), act.method);
      }
      fx.calls[act.path].push_back({act.method, argv});
    }
  }
  return fx;
}

// Applies one rule atomically to a mutable state: evaluate everything against
// the state as it stands, then commit the rule's calls.
void applyRuleSequential(const core::Design& d, const core::Rule& rule,
                         const std::map<std::string, int>& ruleIds,
                         const std::vector<uint8_t>& firing, StateMap& st,
                         std::vector<std::string>& displays) {
  Ctx ctx;
  ctx.d = &d;
  ctx.st = &st;
  ctx.firing = &firing;
  ctx.ruleIds = &ruleIds;
  auto fx = runRule(rule, ctx);
  for (auto& s : fx.displays) displays.push_back(std::move(s));
  for (const auto& [path, value] : fx.regWrites) {
    fx.calls[path].push_back({"_write", {value}});
  }
  for (const auto& i : d.instances) {
    auto it = fx.calls.find(i.path);
    if (it != fx.calls.end()) prim::commitCalls(i, st[i.path], it->second);
  }
}

}  // namespace

Trace simulate(const core::Design& d, const sched::Schedule& s, const Options& opt) {
  const size_t n = d.rules.size();
  Trace trace;

  StateMap st;
  for (const auto& i : d.instances) st[i.path] = prim::initialState(i);

  std::map<std::string, int> ruleIds;
  for (size_t i = 0; i < n; ++i) ruleIds[d.rules[i].name] = static_cast<int>(i);

  // Execution order: classes in order, composition order within each.
  std::vector<int> execOrder;
  for (const auto& comp : s.composition)
    for (int r : comp) execOrder.push_back(r);

  // Signals captured for waveforms.
  std::vector<std::pair<std::string, std::string>> readyNets;   // (path, method)
  std::vector<std::pair<std::string, std::string>> enableNets;  // (path, method)
  if (opt.captureSignals) {
    for (const auto& i : d.instances) {
      for (const auto& m : i.methods) {
        if (!m.alwaysReady) readyNets.push_back({i.path, m.name});
        if (m.protocol != core::Protocol::Value) enableNets.push_back({i.path, m.name});
      }
      if (i.kind == core::PrimKind::Register) trace.signalWidths[sanitize(i.path)] = i.width;
    }
    for (const auto& [p, m] : readyNets) trace.signalWidths[sanitize(p) + "_" + m + "_RDY"] = 1;
    for (const auto& [p, m] : enableNets) trace.signalWidths[sanitize(p) + "_" + m + "_EN"] = 1;
    for (const auto& r : d.rules) trace.signalWidths["WILL_FIRE_" + sanitize(r.name)] = 1;
  }

  auto takeSample = [&](const std::vector<uint8_t>& will,
                        const std::set<std::pair<std::string, std::string>>& enabled) {
    std::map<std::string, uint64_t> sample;
    for (const auto& i : d.instances)
      if (i.kind == core::PrimKind::Register) sample[sanitize(i.path)] = st.at(i.path).reg;
    for (const auto& [p, m] : readyNets)
      sample[sanitize(p) + "_" + m + "_RDY"] =
          prim::methodReady(*d.instance(p), st.at(p), m) ? 1 : 0;
    for (const auto& [p, m] : enableNets)
      sample[sanitize(p) + "_" + m + "_EN"] = enabled.count({p, m}) ? 1 : 0;
    for (size_t i = 0; i < n; ++i)
      sample["WILL_FIRE_" + sanitize(d.rules[i].name)] = i < will.size() && will[i] ? 1 : 0;
    trace.samples.push_back(std::move(sample));
  };

  std::mt19937 rng(opt.seed);

  for (uint64_t cycle = 0; cycle < opt.maxCycles; ++cycle) {
    Ctx base;
    base.d = &d;
    base.st = &st;
    base.ruleIds = &ruleIds;

    // Settle the grant vector; firing() references read the previous round.
    std::vector<uint8_t> firing(n, 0);
    std::vector<uint8_t> will(n, 0);
    bool converged = n == 0;
    for (size_t iter = 0; iter <= n + 1 && !converged; ++iter) {
      if (!s.relaxed) {
        std::vector<uint8_t> can(n, 0);
        Ctx c = base;
        c.firing = &firing;
        for (size_t i = 0; i < n; ++i) can[i] = evalBool(s.canFire[i], c) ? 1 : 0;
        for (size_t i = 0; i < n; ++i) {
          bool w = can[i];
          for (int hi : s.suppressors[i]) w = w && !can[static_cast<size_t>(hi)];
          will[i] = w ? 1 : 0;
        }
      } else {
        will.assign(n, 0);
        for (const auto& comp : s.composition) {
          Overlay overlay;
          Ctx c = base;
          c.firing = &firing;
          c.overlay = &overlay;
          for (int r : comp) {
            size_t ri = static_cast<size_t>(r);
            bool w = evalBool(s.canFire[ri], c);
            for (int hi : s.suppressors[ri])
              w = w && !evalBool(s.canFire[static_cast<size_t>(hi)], c);
            will[ri] = w ? 1 : 0;
            if (w) {
              auto fx = runRule(d.rules[ri], c);
              for (const auto& [p, v] : fx.regWrites) overlay[p] = v;
            }
          }
        }
      }
      if (will == firing) {
        converged = true;
        break;
      }
      firing = will;
    }
    if (!converged) {
      throw SimError("firing() feedback did not settle in cycle " + std::to_string(cycle));
    }

    // Execute fired rules and gather this cycle's effects.
    CycleRecord rec;
    rec.cycle = cycle;
    std::map<std::string, std::vector<prim::Call>> allCalls;
    std::map<std::string, uint64_t> regFinal;  // relaxed: last chained write per register
    std::set<std::pair<std::string, std::string>> enabled;
    StateMap before;  // pre-commit copy for the atomicity audit
    std::vector<int> firedRules;

    auto absorb = [&](const core::Rule& rule, RuleEffects&& fx) {
      for (auto& [path, cs] : fx.calls) {
        auto& dst = allCalls[path];
        for (auto& cl : cs) dst.push_back(std::move(cl));
      }
      for (auto& line : fx.displays) {
        if (opt.display) (*opt.display) << line << "\n";
        rec.displays.push_back(std::move(line));
      }
      for (const auto& e : fx.enabled) enabled.insert(e);
      if (fx.finish && !rec.finished) {
        rec.finished = true;
        rec.finishCode = fx.finishCode;
      }
      (void)rule;
    };

    if (!s.relaxed) {
      std::map<std::string, int> regWriters;
      for (int r : execOrder) {
        size_t ri = static_cast<size_t>(r);
        if (!will[ri]) continue;
        firedRules.push_back(r);
        rec.fired.push_back(d.rules[ri].name);
        Ctx c = base;
        c.firing = &firing;
        auto fx = runRule(d.rules[ri], c);
        for (const auto& [path, value] : fx.regWrites) {
          if (++regWriters[path] > 1)
            throw SimError("schedule admitted two writes to register " + path + " in cycle " +
                           std::to_string(cycle));
          fx.calls[path].push_back({"_write", {value}});
        }
        absorb(d.rules[ri], std::move(fx));
      }
    } else {
      for (const auto& comp : s.composition) {
        Overlay overlay;
        Ctx c = base;
        c.firing = &firing;
        c.overlay = &overlay;
        for (int r : comp) {
          size_t ri = static_cast<size_t>(r);
          if (!will[ri]) continue;
          firedRules.push_back(r);
          rec.fired.push_back(d.rules[ri].name);
          auto fx = runRule(d.rules[ri], c);
          for (const auto& [path, value] : fx.regWrites) {
            overlay[path] = value;
            regFinal[path] = value;
          }
          absorb(d.rules[ri], std::move(fx));
        }
      }
      for (const auto& [path, value] : regFinal) allCalls[path].push_back({"_write", {value}});
    }

    bool audit = opt.checkAtomicity && firedRules.size() >= 2;
    if (audit) before = st;

    // Waveform samples show start-of-cycle register state with this cycle's
    // grant and strobe values.
    if (opt.captureSignals) takeSample(will, enabled);

    for (const auto& i : d.instances) {
      auto it = allCalls.find(i.path);
      if (it != allCalls.end()) prim::commitCalls(i, st[i.path], it->second);
    }

    // Audit: some sequential order of the fired rules must reproduce the
    // committed state and the same multiset of display lines.
    if (audit) {
      std::vector<int> perm = firedRules;
      std::multiset<std::string> wantDisplays(rec.displays.begin(), rec.displays.end());
      uint64_t permCount = 1;
      bool overflow = false;
      for (size_t k = 2; k <= perm.size(); ++k) {
        permCount *= k;
        if (permCount > opt.permutationLimit) {
          overflow = true;
          break;
        }
      }
      bool ok = false;
      auto tryPerm = [&](const std::vector<int>& p) {
        // An order that drives a primitive into an invalid operation (pop of
        // an empty queue, say) is simply not a witness.
        try {
          StateMap seq = before;
          std::vector<std::string> lines;
          for (int r : p)
            applyRuleSequential(d, d.rules[static_cast<size_t>(r)], ruleIds, firing, seq, lines);
          if (seq != st) return false;
          return std::multiset<std::string>(lines.begin(), lines.end()) == wantDisplays;
        } catch (const std::logic_error&) {
          return false;
        }
      };
      if (!overflow) {
        std::sort(perm.begin(), perm.end());
        // Try the execution order first: in relaxed mode it is the intended witness.
        if (tryPerm(firedRules)) {
          ok = true;
        } else {
          do {
            if (tryPerm(perm)) {
              ok = true;
              break;
            }
          } while (std::next_permutation(perm.begin(), perm.end()));
        }
      } else {
        if (tryPerm(firedRules)) ok = true;
        for (unsigned t = 0; !ok && t < opt.permutationLimit; ++t) {
          std::shuffle(perm.begin(), perm.end(), rng);
          if (tryPerm(perm)) ok = true;
        }
      }
      if (!ok) {
        std::string names;
        for (int r : firedRules) names += (names.empty() ? "" : ", ") + d.rules[static_cast<size_t>(r)].name;
        throw SimError("cycle " + std::to_string(cycle) +
                       " is not serialisable; fired rules: " + names);
      }
    }

    for (const auto& i : d.instances)
      if (i.kind == core::PrimKind::Register) rec.registers[i.path] = st.at(i.path).reg;

    bool fin = rec.finished;
    uint64_t code = rec.finishCode;
    trace.cycles.push_back(std::move(rec));
    if (fin) {
      trace.finished = true;
      trace.exitCode = static_cast<int>(code);
      break;
    }
  }

  if (!trace.finished) trace.timedOut = true;

  if (opt.captureSignals) {
    std::map<std::string, uint64_t> last;
    for (const auto& i : d.instances)
      if (i.kind == core::PrimKind::Register) last[sanitize(i.path)] = st.at(i.path).reg;
    for (const auto& [p, m] : readyNets)
      last[sanitize(p) + "_" + m + "_RDY"] = prim::methodReady(*d.instance(p), st.at(p), m) ? 1 : 0;
    for (const auto& [p, m] : enableNets) last[sanitize(p) + "_" + m + "_EN"] = 0;
    for (const auto& r : d.rules) last["WILL_FIRE_" + sanitize(r.name)] = 0;
    trace.samples.push_back(std::move(last));
  }

  return trace;
}

std::string vcdDocument(const core::Design& d, const Trace& trace) {
  (void)d;
  std::string out;
  out += "$timescale 1ns $end\n";
  out += "$scope module top $end\n";

  std::vector<std::pair<std::string, int>> signals(trace.signalWidths.begin(),
                                                   trace.signalWidths.end());
  auto idOf = [](size_t k) {
    std::string id;
    do {
      id += static_cast<char>('!' + (k % 94));
      k /= 94;
    } while (k);
    return id;
  };
  for (size_t k = 0; k < signals.size(); ++k) {
    out += "$var wire " + std::to_string(signals[k].second) + " " + idOf(k) + " " +
           signals[k].first + " $end\n";
  }
  out += "$upscope $end\n$enddefinitions $end\n";

  auto emitValue = [&](size_t k, uint64_t v) {
    const auto& [name, width] = signals[k];
    if (width == 1) {
      out += (v ? "1" : "0") + idOf(k) + "\n";
    } else {
      std::string bits;
      for (int b = width - 1; b >= 0; --b) bits += ((v >> b) & 1) ? '1' : '0';
      out += "b" + bits + " " + idOf(k) + "\n";
    }
  };

  std::vector<uint64_t> lastValue(signals.size(), 0);
  for (size_t t = 0; t < trace.samples.size(); ++t) {
    out += "#" + std::to_string(t) + "\n";
    if (t == 0) out += "$dumpvars\n";
    for (size_t k = 0; k < signals.size(); ++k) {
      auto it = trace.samples[t].find(signals[k].first);
      uint64_t v = it == trace.samples[t].end() ? 0 : it->second;
      if (t == 0 || v != lastValue[k]) emitValue(k, v);
      lastValue[k] = v;
    }
    if (t == 0) out += "$end\n";
  }
  return out;
}

}  // namespace bluec::sim
