#include "bluec/schedule.hpp"

#include <algorithm>
#include <map>

#include "vendor/json.hpp"

namespace bluec::sched {

namespace {

using Resource = std::pair<std::string, std::string>;  // (instance path, method)

// Collects every method invocation of the rule: value reads anywhere in its
// expressions plus the action calls themselves.  Methods that are always
// ready and take no arguments are shareable and never listed.
class ResourceCollector {
 public:
  ResourceCollector(const core::Design& d) : d_(d) {}

  std::set<Resource> collect(const core::Rule& r) {
    out_.clear();
    walk(r.guard);
    for (const auto& ig : r.inheritedGuards) {
      walk(ig.guard);
      for (const auto& [c, pol] : ig.whenParts) walk(c);
    }
    for (const auto& a : r.actions) {
      for (const auto& [c, pol] : a.whenParts) walk(c);
      for (const auto& arg : a.args) walk(arg);
      if (a.kind == core::Action::Kind::Call) add(a.path, a.method);
    }
    return out_;
  }

 private:
  void add(const std::string& path, const std::string& method) {
    const auto* inst = d_.instance(path);
    const auto* m = inst ? inst->method(method) : nullptr;
    if (!m) throw std::logic_error("unknown method " + path + "." + method);
    if (m->alwaysReady && m->argWidths.empty()) return;
    out_.insert({path, method});
  }

  void walk(const core::ExprPtr& e) {
    if (!e) return;
    if (e->kind == core::Expr::Kind::Read) add(e->path, e->method);
    for (const auto& a : e->args) walk(a);
    walk(e->a);
    walk(e->b);
    walk(e->c);
  }

  const core::Design& d_;
  std::set<Resource> out_;
};

bool isRegisterWrite(const core::Design& d, const Resource& r) {
  const auto* inst = d.instance(r.first);
  return inst && inst->kind == core::PrimKind::Register && r.second == "_write";
}

struct Conflicts {
  // shared non-shareable resources per rule pair; pair stored (min,max)
  std::map<std::pair<int, int>, std::vector<Resource>> shared;
  std::map<std::pair<int, int>, bool> hard;  // involves anything beyond register writes
};

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(size_t n) : parent(n) {
    for (size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

std::string ruleName(const core::Design& d, int i) { return d.rules[static_cast<size_t>(i)].name; }

}  // namespace

Schedule buildSchedule(const core::Design& design, const guards::GuardSet& gs,
                       bool relaxedWrites, Diagnostics& diags) {
  const size_t n = design.rules.size();
  Schedule s;
  s.relaxed = relaxedWrites;
  s.classOf.assign(n, 0);
  s.suppressors.assign(n, {});
  for (size_t i = 0; i < n; ++i) s.canFire.push_back(gs.guards[i].expr);

  std::vector<std::set<Resource>> res(n);
  {
    ResourceCollector rc(design);
    for (size_t i = 0; i < n; ++i) res[i] = rc.collect(design.rules[i]);
  }

  Conflicts conf;
  UnionFind uf(n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      std::vector<Resource> both;
      std::set_intersection(res[i].begin(), res[i].end(), res[j].begin(), res[j].end(),
                            std::back_inserter(both));
      if (both.empty()) continue;
      bool hard = false;
      for (const auto& r : both)
        if (!isRegisterWrite(design, r)) hard = true;
      conf.shared[{static_cast<int>(i), static_cast<int>(j)}] = std::move(both);
      conf.hard[{static_cast<int>(i), static_cast<int>(j)}] = hard;
      uf.unite(static_cast<int>(i), static_cast<int>(j));
    }
  }
  auto conflicting = [&](int a, int b) {
    return conf.shared.count({std::min(a, b), std::max(a, b)}) != 0;
  };
  // In relaxed mode register-write sharing alone no longer suppresses.
  auto suppresses = [&](int a, int b) {
    auto it = conf.hard.find({std::min(a, b), std::max(a, b)});
    if (it == conf.hard.end()) return false;
    return relaxedWrites ? it->second : true;
  };

  // Group rules into classes, ordered by least member name.
  std::map<int, std::vector<int>> byRoot;
  for (size_t i = 0; i < n; ++i) byRoot[uf.find(static_cast<int>(i))].push_back(static_cast<int>(i));
  std::vector<std::vector<int>> rawClasses;
  for (auto& [root, members] : byRoot) rawClasses.push_back(members);
  std::sort(rawClasses.begin(), rawClasses.end(), [&](const auto& a, const auto& b) {
    std::string an = ruleName(design, a[0]), bn = ruleName(design, b[0]);
    for (int m : a) an = std::min(an, ruleName(design, m));
    for (int m : b) bn = std::min(bn, ruleName(design, m));
    return an < bn;
  });

  // Exclusivity facts within each class.
  for (const auto& members : rawClasses) {
    for (size_t x = 0; x < members.size(); ++x) {
      for (size_t y = x + 1; y < members.size(); ++y) {
        int a = members[x], b = members[y];
        if (guards::mutuallyExclusive(gs.guards[static_cast<size_t>(a)].cnf,
                                      gs.guards[static_cast<size_t>(b)].cnf)) {
          s.exclusive.insert({std::min(a, b), std::max(a, b)});
        }
      }
    }
  }

  auto strictImplies = [&](int a, int b) {
    const auto& ga = gs.guards[static_cast<size_t>(a)].cnf;
    const auto& gb = gs.guards[static_cast<size_t>(b)].cnf;
    return guards::implies(ga, gb) && !guards::implies(gb, ga);
  };

  std::set<std::string> fweNames(design.annotations.fireWhenEnabled.begin(),
                                 design.annotations.fireWhenEnabled.end());

  // Priority order within each class: explicit edges from annotations, then
  // guard subsumption, then source position as the final tie-break.
  for (size_t ci = 0; ci < rawClasses.size(); ++ci) {
    const auto& members = rawClasses[ci];
    std::set<int> inClass(members.begin(), members.end());
    std::set<std::pair<int, int>> edges;  // (before, after)

    for (const auto& list : design.annotations.urgency) {
      for (size_t k = 0; k + 1 < list.size(); ++k) {
        int a = design.ruleIndex(list[k]);
        int b = design.ruleIndex(list[k + 1]);
        if (inClass.count(a) && inClass.count(b)) edges.insert({a, b});
      }
    }
    for (int f : members) {
      if (!fweNames.count(ruleName(design, f))) continue;
      for (int o : members) {
        if (o == f || fweNames.count(ruleName(design, o))) continue;
        if (conflicting(f, o)) edges.insert({f, o});
      }
    }

    std::set<int> remaining(members.begin(), members.end());
    std::vector<int> order;
    while (!remaining.empty()) {
      std::vector<int> ready;
      for (int r : remaining) {
        bool blocked = false;
        for (const auto& [a, b] : edges)
          if (b == r && remaining.count(a)) blocked = true;
        if (!blocked) ready.push_back(r);
      }
      if (ready.empty()) {
        // Walk incoming edges until a node repeats to present the cycle.
        std::vector<int> path{*remaining.begin()};
        std::set<int> seenSet{path[0]};
        while (true) {
          int cur = path.back(), prev = -1;
          for (const auto& [a, b] : edges)
            if (b == cur && remaining.count(a)) prev = a;
          path.push_back(prev);
          if (seenSet.count(prev)) break;
          seenSet.insert(prev);
        }
        std::string msg = "urgency constraints form a cycle:";
        for (auto it = path.rbegin(); it != path.rend(); ++it) msg += " " + ruleName(design, *it);
        throw CompileError(design.rules[static_cast<size_t>(path.back())].loc, msg);
      }
      std::vector<int> undominated;
      for (int r : ready) {
        bool dom = false;
        for (int o : ready)
          if (o != r && strictImplies(o, r)) dom = true;
        if (!dom) undominated.push_back(r);
      }
      int pick = undominated[0];
      for (int r : undominated) {
        const auto& lr = design.rules[static_cast<size_t>(r)].loc;
        const auto& lp = design.rules[static_cast<size_t>(pick)].loc;
        auto key = [&](const SourceLoc& l, int idx) {
          return std::make_tuple(l.file, l.line, ruleName(design, idx));
        };
        if (key(lr, r) < key(lp, pick)) pick = r;
      }
      order.push_back(pick);
      remaining.erase(pick);
    }

    s.classes.push_back(order);
    for (int r : order) s.classOf[static_cast<size_t>(r)] = static_cast<int>(ci);

    // Composition order: execution_order edges, tie broken by priority rank.
    std::map<int, size_t> rank;
    for (size_t k = 0; k < order.size(); ++k) rank[order[k]] = k;
    std::set<std::pair<int, int>> compEdges;
    for (const auto& list : design.annotations.executionOrder) {
      for (size_t k = 0; k + 1 < list.size(); ++k) {
        int a = design.ruleIndex(list[k]);
        int b = design.ruleIndex(list[k + 1]);
        if (inClass.count(a) && inClass.count(b)) compEdges.insert({a, b});
      }
    }
    std::set<int> rem(members.begin(), members.end());
    std::vector<int> comp;
    while (!rem.empty()) {
      int pick = -1;
      for (int r : rem) {
        bool blocked = false;
        for (const auto& [a, b] : compEdges)
          if (b == r && rem.count(a)) blocked = true;
        if (blocked) continue;
        if (pick < 0 || rank[r] < rank[pick]) pick = r;
      }
      if (pick < 0) {
        throw CompileError(design.rules[static_cast<size_t>(*rem.begin())].loc,
                           "execution_order constraints form a cycle");
      }
      comp.push_back(pick);
      rem.erase(pick);
    }
    s.composition.push_back(comp);

    std::set<std::string> shared;
    for (size_t x = 0; x < members.size(); ++x) {
      for (size_t y = x + 1; y < members.size(); ++y) {
        auto it = conf.shared.find({std::min(members[x], members[y]),
                                    std::max(members[x], members[y])});
        if (it == conf.shared.end()) continue;
        for (const auto& r : it->second) shared.insert(r.first + "." + r.second);
      }
    }
    s.classResources.emplace_back(shared.begin(), shared.end());
  }

  // Grants.
  for (size_t ci = 0; ci < s.classes.size(); ++ci) {
    const auto& order = s.classes[ci];
    for (size_t k = 0; k < order.size(); ++k) {
      int r = order[k];
      for (size_t j = 0; j < k; ++j) {
        int hi = order[j];
        if (!suppresses(hi, r)) continue;
        if (s.exclusivePair(hi, r)) continue;
        s.suppressors[static_cast<size_t>(r)].push_back(hi);
      }
    }
  }
  for (size_t i = 0; i < n; ++i) {
    core::ExprPtr blockers;
    for (int hi : s.suppressors[i]) {
      const auto& c = s.canFire[static_cast<size_t>(hi)];
      blockers = blockers ? core::mkBin(core::BinOp::Or, blockers, c, c->loc) : c;
    }
    if (!blockers) {
      s.willFire.push_back(s.canFire[i]);
    } else {
      s.willFire.push_back(core::mkBin(core::BinOp::And, s.canFire[i],
                                       core::mkUn(core::UnOp::Not, blockers, blockers->loc),
                                       s.canFire[i]->loc));
    }
  }

  // Dead rules: a guard that is never true, or a grant wholly shadowed by a
  // higher-priority rule.
  for (size_t i = 0; i < n; ++i) {
    const auto& r = design.rules[i];
    if (guards::manifestlyFalse(gs.guards[i].cnf)) {
      diags.warnHigh(r.loc, "rule '" + r.name + "' can never fire: its guard is never true");
      continue;
    }
    for (int hi : s.suppressors[i]) {
      if (guards::implies(gs.guards[i].cnf, gs.guards[static_cast<size_t>(hi)].cnf)) {
        diags.warnHigh(r.loc, "rule '" + r.name + "' can never fire: rule '" +
                                  ruleName(design, hi) + "' always takes precedence");
        break;
      }
    }
  }

  // fire_when_enabled must hold: the rule may not have suppressors.
  for (const auto& name : design.annotations.fireWhenEnabled) {
    int i = design.ruleIndex(name);
    if (i < 0) continue;  // already rejected during elaboration
    if (!s.suppressors[static_cast<size_t>(i)].empty()) {
      throw CompileError(design.rules[static_cast<size_t>(i)].loc,
                         "fire_when_enabled cannot be guaranteed for rule '" + name +
                             "': it conflicts with rule '" +
                             ruleName(design, s.suppressors[static_cast<size_t>(i)][0]) + "'");
    }
  }

  return s;
}

std::string scheduleReportJson(const core::Design& design, const guards::GuardSet& gs,
                               const Schedule& s, const Diagnostics& diags) {
  nlohmann::json j;
  j["top"] = design.top;
  j["mode"] = s.relaxed ? "relaxed" : "standard";
  j["classes"] = nlohmann::json::array();
  for (size_t ci = 0; ci < s.classes.size(); ++ci) {
    nlohmann::json c;
    c["priority"] = nlohmann::json::array();
    for (int r : s.classes[ci]) c["priority"].push_back(design.rules[static_cast<size_t>(r)].name);
    c["composition"] = nlohmann::json::array();
    for (int r : s.composition[ci])
      c["composition"].push_back(design.rules[static_cast<size_t>(r)].name);
    c["resources"] = s.classResources[ci];
    j["classes"].push_back(c);
  }
  j["rules"] = nlohmann::json::array();
  for (size_t i = 0; i < design.rules.size(); ++i) {
    nlohmann::json r;
    r["name"] = design.rules[i].name;
    r["class"] = s.classOf[i];
    r["can_fire"] = core::exprStr(s.canFire[i]);
    r["will_fire"] = core::exprStr(s.willFire[i]);
    r["guard_clauses"] = nlohmann::json::array();
    for (const auto& c : gs.guards[i].cnf.clauses)
      r["guard_clauses"].push_back(guards::clauseStr(c, gs.atoms));
    r["suppressors"] = nlohmann::json::array();
    for (int hi : s.suppressors[i]) r["suppressors"].push_back(design.rules[static_cast<size_t>(hi)].name);
    r["exclusive_with"] = nlohmann::json::array();
    for (size_t k = 0; k < design.rules.size(); ++k) {
      if (k != i && s.exclusivePair(static_cast<int>(i), static_cast<int>(k)))
        r["exclusive_with"].push_back(design.rules[k].name);
    }
    j["rules"].push_back(r);
  }
  j["warnings"] = nlohmann::json::array();
  for (const auto& d : diags.all()) j["warnings"].push_back(d.str());
  return j.dump(2) + "\n";
}

}  // namespace bluec::sched
