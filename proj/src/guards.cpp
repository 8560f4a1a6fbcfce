#include "bluec/guards.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace bluec::guards {

namespace {

// Clause construction: sort, dedupe, drop tautologies (x | !x).
std::optional<Clause> mkClause(std::vector<Literal> lits) {
  std::sort(lits.begin(), lits.end());
  lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
  for (size_t i = 1; i < lits.size(); ++i) {
    if (lits[i].atom == lits[i - 1].atom && lits[i].positive != lits[i - 1].positive) {
      return std::nullopt;
    }
  }
  return lits;
}

struct BudgetExceeded {};

void checkBudget(const std::vector<Clause>& cs, size_t budget) {
  if (cs.size() > budget) throw BudgetExceeded{};
}

}  // namespace

Literal AtomTable::internKey(const std::string& key, const core::ExprPtr& representative,
                             bool positive) {
  auto it = std::lower_bound(byKey_.begin(), byKey_.end(), key,
                             [](const auto& p, const std::string& k) { return p.first < k; });
  if (it != byKey_.end() && it->first == key) return {it->second, positive};
  int id = static_cast<int>(exprs_.size());
  exprs_.push_back(representative);
  byKey_.insert(it, {key, id});
  return {id, positive};
}

Literal AtomTable::atomOf(const core::ExprPtr& e) {
  using K = core::Expr::Kind;
  if (e->kind == K::Bin) {
    switch (e->bin) {
      case core::BinOp::Lt:
        return internKey("cmp<|" + core::exprStr(e->a) + "|" + core::exprStr(e->b), e, true);
      case core::BinOp::Ge: {
        auto rep = core::mkBin(core::BinOp::Lt, e->a, e->b, e->loc);
        auto l = internKey("cmp<|" + core::exprStr(e->a) + "|" + core::exprStr(e->b), rep, true);
        return {l.atom, false};
      }
      case core::BinOp::Le:
        return internKey("cmp<=|" + core::exprStr(e->a) + "|" + core::exprStr(e->b), e, true);
      case core::BinOp::Gt: {
        auto rep = core::mkBin(core::BinOp::Le, e->a, e->b, e->loc);
        auto l = internKey("cmp<=|" + core::exprStr(e->a) + "|" + core::exprStr(e->b), rep, true);
        return {l.atom, false};
      }
      default:
        break;
    }
  }
  return internKey("x|" + core::exprStr(e), e, true);
}

std::optional<Literal> AtomTable::find(const core::ExprPtr& e) const {
  auto lookup = [this](const std::string& key) -> std::optional<int> {
    auto it = std::lower_bound(byKey_.begin(), byKey_.end(), key,
                               [](const auto& p, const std::string& k) { return p.first < k; });
    if (it != byKey_.end() && it->first == key) return it->second;
    return std::nullopt;
  };
  using K = core::Expr::Kind;
  if (e->kind == K::Bin) {
    switch (e->bin) {
      case core::BinOp::Lt:
        if (auto id = lookup("cmp<|" + core::exprStr(e->a) + "|" + core::exprStr(e->b)))
          return Literal{*id, true};
        return std::nullopt;
      case core::BinOp::Ge:
        if (auto id = lookup("cmp<|" + core::exprStr(e->a) + "|" + core::exprStr(e->b)))
          return Literal{*id, false};
        return std::nullopt;
      case core::BinOp::Le:
        if (auto id = lookup("cmp<=|" + core::exprStr(e->a) + "|" + core::exprStr(e->b)))
          return Literal{*id, true};
        return std::nullopt;
      case core::BinOp::Gt:
        if (auto id = lookup("cmp<=|" + core::exprStr(e->a) + "|" + core::exprStr(e->b)))
          return Literal{*id, false};
        return std::nullopt;
      default:
        break;
    }
  }
  if (auto id = lookup("x|" + core::exprStr(e))) return Literal{*id, true};
  return std::nullopt;
}

namespace {

std::vector<Clause> cnfRec(const core::ExprPtr& e, bool positive, AtomTable& atoms,
                           size_t budget);

std::vector<Clause> orCombine(const std::vector<Clause>& x, const std::vector<Clause>& y,
                              size_t budget) {
  std::vector<Clause> out;
  for (const auto& a : x) {
    for (const auto& b : y) {
      std::vector<Literal> merged = a;
      merged.insert(merged.end(), b.begin(), b.end());
      if (auto c = mkClause(std::move(merged))) out.push_back(std::move(*c));
      checkBudget(out, budget);
    }
  }
  return out;
}

std::vector<Clause> cnfRec(const core::ExprPtr& e, bool positive, AtomTable& atoms,
                           size_t budget) {
  using K = core::Expr::Kind;
  if (!e) return positive ? std::vector<Clause>{} : std::vector<Clause>{Clause{}};
  switch (e->kind) {
    case K::Const: {
      bool v = e->value != 0;
      if (v == positive) return {};
      return {Clause{}};
    }
    case K::Un:
      if (e->un == core::UnOp::Not) return cnfRec(e->a, !positive, atoms, budget);
      break;  // or-reduce is opaque
    case K::Bin:
      if (e->bin == core::BinOp::And || e->bin == core::BinOp::Or) {
        bool conj = (e->bin == core::BinOp::And) == positive;
        auto x = cnfRec(e->a, positive, atoms, budget);
        auto y = cnfRec(e->b, positive, atoms, budget);
        if (conj) {
          x.insert(x.end(), y.begin(), y.end());
          checkBudget(x, budget);
          return x;
        }
        return orCombine(x, y, budget);
      }
      break;
    case K::Mux:
      if (e->a->width == 1 && e->b->width == 1) {
        auto notC = cnfRec(e->c, false, atoms, budget);
        auto c = cnfRec(e->c, true, atoms, budget);
        auto whenTrue = orCombine(notC, cnfRec(e->a, positive, atoms, budget), budget);
        auto whenFalse = orCombine(c, cnfRec(e->b, positive, atoms, budget), budget);
        whenTrue.insert(whenTrue.end(), whenFalse.begin(), whenFalse.end());
        checkBudget(whenTrue, budget);
        return whenTrue;
      }
      break;
    case K::Str:
      throw std::logic_error("string expression in boolean context");
    default:
      break;
  }
  Literal l = atoms.atomOf(e);
  if (!positive) l.positive = !l.positive;
  return {Clause{l}};
}

void normalize(std::vector<Clause>& cs) {
  std::sort(cs.begin(), cs.end());
  cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
}

}  // namespace

Cnf toCnf(const core::ExprPtr& e, AtomTable& atoms, size_t clauseBudget) {
  try {
    auto cs = cnfRec(e, true, atoms, clauseBudget);
    normalize(cs);
    return {std::move(cs)};
  } catch (const BudgetExceeded&) {
    Literal l = atoms.atomOf(e);
    return {{Clause{l}}};
  }
}

namespace {

class GuardBuilder {
 public:
  GuardBuilder(const core::Design& d, AtomTable& atoms) : d_(d), atoms_(atoms) {}

  CompositeGuard build(const core::Rule& rule) {
    pieces_.clear();
    seen_.clear();

    if (rule.guard) {
      auto cs = cnfOf(rule.guard);
      addPiece(rule.guard, std::move(cs), "explicit");
      collectExpr(rule.guard, {});
    }

    for (const auto& ig : rule.inheritedGuards) {
      auto gates = stableParts(ig.whenParts);
      std::vector<Clause> gated;
      for (auto& c : cnfOf(ig.guard)) {
        if (auto g = gateClause(std::move(c), gates)) gated.push_back(std::move(*g));
      }
      addPiece(gateExpr(ig.guard, gates), std::move(gated), "guard of " + ig.method);
      collectExpr(ig.guard, gates);
    }

    for (const auto& act : rule.actions) {
      auto gates = stableParts(act.whenParts);
      for (size_t i = 0; i < act.whenParts.size(); ++i) {
        std::vector<std::pair<core::ExprPtr, bool>> outer(act.whenParts.begin(),
                                                          act.whenParts.begin() + i);
        collectExpr(act.whenParts[i].first, stableParts(outer));
      }
      if (act.kind == core::Action::Kind::Call && !alwaysReady(act.path, act.method)) {
        addReady(act.path, act.method, gates);
      }
      for (const auto& a : act.args) collectExpr(a, gates);
    }

    CompositeGuard out;
    out.rule = rule.name;
    // Readiness conjuncts lead the expression: with short-circuit evaluation
    // the explicit guard and inherited guards are then only reached when the
    // methods they read are safe to sample.
    core::ExprPtr all;
    for (const auto& p : pieces_)
      if (p.ready) all = core::andAlso(all, p.expr);
    for (const auto& p : pieces_)
      if (!p.ready) all = core::andAlso(all, p.expr);
    std::vector<std::pair<Clause, std::string>> tagged;
    for (const auto& p : pieces_) {
      for (const auto& c : p.clauses) tagged.emplace_back(c, p.provenance);
    }
    std::stable_sort(tagged.begin(), tagged.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    tagged.erase(std::unique(tagged.begin(), tagged.end(),
                             [](const auto& a, const auto& b) { return a.first == b.first; }),
                 tagged.end());
    for (auto& [c, p] : tagged) {
      out.cnf.clauses.push_back(std::move(c));
      out.provenance.push_back(std::move(p));
    }
    out.expr = all ? all : core::mkBool(true, rule.loc);
    return out;
  }

 private:
  using Gates = std::vector<std::pair<core::ExprPtr, bool>>;

  struct Piece {
    core::ExprPtr expr;
    std::vector<Clause> clauses;
    std::string provenance;
    bool ready = false;  // readiness conjunct; leads the composite expression
  };

  std::vector<Clause> cnfOf(const core::ExprPtr& e) { return toCnf(e, atoms_).clauses; }

  bool nonStrict() const { return d_.guardMode == core::GuardMode::NonStrict; }

  const core::MethodSpec& spec(const std::string& path, const std::string& method) const {
    const auto* inst = d_.instance(path);
    if (!inst) throw std::logic_error("unknown instance " + path);
    const auto* m = inst->method(method);
    if (!m) throw std::logic_error("unknown method " + path + "." + method);
    return *m;
  }

  bool alwaysReady(const std::string& path, const std::string& method) const {
    return spec(path, method).alwaysReady;
  }

  bool earlyStable(const core::ExprPtr& e) const {
    using K = core::Expr::Kind;
    if (!e) return true;
    switch (e->kind) {
      case K::Const:
        return true;
      case K::Read: {
        if (!alwaysReady(e->path, e->method)) return false;
        for (const auto& a : e->args)
          if (!earlyStable(a)) return false;
        return true;
      }
      case K::Un:
        return earlyStable(e->a);
      case K::Bin:
        return earlyStable(e->a) && earlyStable(e->b);
      case K::Mux:
        return earlyStable(e->c) && earlyStable(e->a) && earlyStable(e->b);
      default:
        return false;
    }
  }

  // Early-stable entries of a branch-condition list; used to gate readiness
  // requirements in non-strict mode.  In strict mode gating is disabled.
  Gates stableParts(const Gates& parts) const {
    Gates out;
    if (!nonStrict()) return out;
    for (const auto& p : parts) {
      if (earlyStable(p.first)) out.push_back(p);
    }
    return out;
  }

  // Extends a clause with the negations of the gate conditions, so it only
  // bites when the gated branch is selected.  nullopt when the result is a
  // tautology.
  std::optional<Clause> gateClause(Clause c, const Gates& gates) {
    std::vector<Literal> lits(c.begin(), c.end());
    for (const auto& [cond, pol] : gates) {
      Literal l = atoms_.atomOf(cond);
      if (pol) l.positive = !l.positive;
      lits.push_back(l);
    }
    return mkClause(std::move(lits));
  }

  core::ExprPtr gateExpr(const core::ExprPtr& body, const Gates& gates) {
    if (gates.empty()) return body;
    core::ExprPtr conj;
    for (const auto& [cond, pol] : gates) {
      auto lit = pol ? cond : core::mkUn(core::UnOp::Not, cond, cond->loc);
      conj = core::andAlso(conj, lit);
    }
    return core::mkBin(core::BinOp::Or, core::mkUn(core::UnOp::Not, conj, body->loc), body,
                       body->loc);
  }

  void addPiece(core::ExprPtr expr, std::vector<Clause> clauses, std::string provenance,
                bool ready = false) {
    if (expr && expr->kind == core::Expr::Kind::Const && expr->value != 0 && clauses.empty()) {
      return;
    }
    pieces_.push_back({std::move(expr), std::move(clauses), std::move(provenance), ready});
  }

  void addReady(const std::string& path, const std::string& method, const Gates& gates) {
    std::string key = path + "." + method;
    for (const auto& [cond, pol] : gates) {
      key += pol ? "|+" : "|-";
      key += core::exprStr(cond);
    }
    if (!seen_.insert(key).second) return;
    auto ready = core::mkReady(path, method);
    std::vector<Clause> cs;
    if (auto c = gateClause({atoms_.atomOf(ready)}, gates)) cs.push_back(std::move(*c));
    addPiece(gateExpr(ready, gates), std::move(cs), "implicit: " + path + "." + method, true);
  }

  void collectExpr(const core::ExprPtr& e, const Gates& gates) {
    using K = core::Expr::Kind;
    if (!e) return;
    switch (e->kind) {
      case K::Read:
        if (!alwaysReady(e->path, e->method)) addReady(e->path, e->method, gates);
        for (const auto& a : e->args) collectExpr(a, gates);
        return;
      case K::Un:
        collectExpr(e->a, gates);
        return;
      case K::Bin:
        if (nonStrict() && e->width == 1 &&
            (e->bin == core::BinOp::And || e->bin == core::BinOp::Or) && earlyStable(e->a)) {
          collectExpr(e->a, gates);
          Gates g = gates;
          g.emplace_back(e->a, e->bin == core::BinOp::And);
          collectExpr(e->b, g);
          return;
        }
        collectExpr(e->a, gates);
        collectExpr(e->b, gates);
        return;
      case K::Mux: {
        collectExpr(e->c, gates);
        if (nonStrict() && earlyStable(e->c)) {
          Gates gt = gates, gf = gates;
          gt.emplace_back(e->c, true);
          gf.emplace_back(e->c, false);
          collectExpr(e->a, gt);
          collectExpr(e->b, gf);
          return;
        }
        collectExpr(e->a, gates);
        collectExpr(e->b, gates);
        return;
      }
      default:
        return;
    }
  }

  const core::Design& d_;
  AtomTable& atoms_;
  std::vector<Piece> pieces_;
  std::set<std::string> seen_;
};

}  // namespace

GuardSet buildGuards(const core::Design& design) {
  GuardSet gs;
  GuardBuilder b(design, gs.atoms);
  for (const auto& r : design.rules) gs.guards.push_back(b.build(r));
  return gs;
}

bool mutuallyExclusive(const Cnf& g1, const Cnf& g2) {
  std::set<std::pair<int, bool>> units;
  for (const auto& c : g1.clauses) {
    if (c.size() == 1) units.insert({c[0].atom, c[0].positive});
  }
  for (const auto& c : g2.clauses) {
    if (c.size() == 1 && units.count({c[0].atom, !c[0].positive})) return true;
  }
  return false;
}

bool implies(const Cnf& g1, const Cnf& g2) {
  for (const auto& c2 : g2.clauses) {
    bool subsumed = false;
    for (const auto& c1 : g1.clauses) {
      if (c1.size() <= c2.size() &&
          std::includes(c2.begin(), c2.end(), c1.begin(), c1.end())) {
        subsumed = true;
        break;
      }
    }
    if (!subsumed) return false;
  }
  return true;
}

bool manifestlyFalse(const Cnf& g) {
  std::set<std::pair<int, bool>> units;
  for (const auto& c : g.clauses) {
    if (c.empty()) return true;
    if (c.size() == 1) {
      if (units.count({c[0].atom, !c[0].positive})) return true;
      units.insert({c[0].atom, c[0].positive});
    }
  }
  return false;
}

bool evalOverAtoms(const core::ExprPtr& e, const AtomTable& atoms,
                   const std::vector<bool>& assign) {
  using K = core::Expr::Kind;
  if (!e) return true;
  if (auto l = atoms.find(e)) {
    bool v = assign.at(static_cast<size_t>(l->atom));
    return l->positive ? v : !v;
  }
  switch (e->kind) {
    case K::Const:
      return e->value != 0;
    case K::Un:
      if (e->un == core::UnOp::Not) return !evalOverAtoms(e->a, atoms, assign);
      break;
    case K::Bin:
      if (e->bin == core::BinOp::And)
        return evalOverAtoms(e->a, atoms, assign) && evalOverAtoms(e->b, atoms, assign);
      if (e->bin == core::BinOp::Or)
        return evalOverAtoms(e->a, atoms, assign) || evalOverAtoms(e->b, atoms, assign);
      break;
    case K::Mux:
      if (e->a->width == 1 && e->b->width == 1) {
        return evalOverAtoms(e->c, atoms, assign) ? evalOverAtoms(e->a, atoms, assign)
                                                  : evalOverAtoms(e->b, atoms, assign);
      }
      break;
    default:
      break;
  }
  throw std::logic_error("atom missing from table: " + core::exprStr(e));
}

std::string literalStr(const Literal& l, const AtomTable& atoms) {
  std::string s = l.positive ? "" : "!";
  return s + core::exprStr(atoms.expr(l.atom));
}

std::string clauseStr(const Clause& c, const AtomTable& atoms) {
  if (c.empty()) return "{false}";
  std::string s = "{";
  for (size_t i = 0; i < c.size(); ++i) {
    if (i) s += " | ";
    s += literalStr(c[i], atoms);
  }
  return s + "}";
}

std::string guardReport(const core::Design& design, const GuardSet& gs) {
  std::string out;
  for (size_t i = 0; i < design.rules.size(); ++i) {
    const auto& r = design.rules[i];
    const auto& g = gs.guards[i];
    out += "rule " + r.name + "\n";
    out += "  explicit: " + core::exprStr(r.guard) + "\n";
    out += "  composite: " + core::exprStr(g.expr) + "\n";
    if (g.cnf.clauses.empty()) {
      out += "  cnf: true\n";
    } else {
      out += "  cnf:\n";
      for (size_t k = 0; k < g.cnf.clauses.size(); ++k) {
        out += "    " + clauseStr(g.cnf.clauses[k], gs.atoms) + "  ; " + g.provenance[k] + "\n";
      }
    }
  }
  return out;
}

}  // namespace bluec::guards
