#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bluec/core.hpp"

namespace bluec::guards {

// A literal is a possibly negated reference to an interned atom.  Atoms are
// boolean-valued expressions that the CNF machinery treats as opaque, except
// that the comparison pairs {<, >=} and {<=, >} over identical operand trees
// canonicalise to one atom with opposite polarities.
struct Literal {
  int atom = 0;
  bool positive = true;

  friend bool operator==(const Literal& x, const Literal& y) {
    return x.atom == y.atom && x.positive == y.positive;
  }
  friend bool operator<(const Literal& x, const Literal& y) {
    if (x.atom != y.atom) return x.atom < y.atom;
    return x.positive < y.positive;
  }
};

// A clause is a disjunction of literals, kept sorted and deduplicated.
using Clause = std::vector<Literal>;

// Conjunction of clauses.  No clauses at all means "true"; an empty clause
// means "false".  Clauses are sorted and deduplicated.
struct Cnf {
  std::vector<Clause> clauses;
};

class AtomTable {
 public:
  // Returns the canonical literal for a single-bit expression treated as an
  // atom, interning it on first sight.
  Literal atomOf(const core::ExprPtr& e);
  // Lookup without interning; nullopt when the expression was never interned.
  std::optional<Literal> find(const core::ExprPtr& e) const;
  const core::ExprPtr& expr(int atom) const { return exprs_[static_cast<size_t>(atom)]; }
  size_t size() const { return exprs_.size(); }

 private:
  Literal internKey(const std::string& key, const core::ExprPtr& representative, bool positive);
  std::vector<core::ExprPtr> exprs_;
  std::vector<std::pair<std::string, int>> byKey_;  // sorted by key
};

// Conjunctive normal form of a single-bit expression.  Recursion treats
// constants, !, &&, ||, and single-bit muxes as structure; everything else
// becomes an atom.  If distribution would exceed clauseBudget clauses the
// whole expression collapses into one opaque atom instead.
Cnf toCnf(const core::ExprPtr& e, AtomTable& atoms, size_t clauseBudget = 256);

// The composite guard of one rule: explicit guard, inherited method guards,
// and implicit readiness of every non-always-ready method the rule touches.
struct CompositeGuard {
  std::string rule;
  core::ExprPtr expr;                   // full guard as an expression (CAN_FIRE before arbitration)
  Cnf cnf;                              // same guard, normalised for analysis
  std::vector<std::string> provenance;  // one entry per clause: where it came from
};

struct GuardSet {
  AtomTable atoms;                      // shared across rules so cross-rule tests line up
  std::vector<CompositeGuard> guards;   // parallel to design.rules
};

GuardSet buildGuards(const core::Design& design);

// True when g1 and g2 cannot hold together: some unit clause of one appears
// complemented as a unit clause of the other.
bool mutuallyExclusive(const Cnf& g1, const Cnf& g2);

// Syntactic implication: every clause of g2 is subsumed by some clause of g1.
bool implies(const Cnf& g1, const Cnf& g2);

// True when the guard can be seen false without knowing any atom: it contains
// the empty clause or a complementary pair of unit clauses.
bool manifestlyFalse(const Cnf& g);

// Evaluates a single-bit expression over a truth assignment to atoms,
// mirroring the atom boundaries used by toCnf.  Atoms absent from the table
// raise std::logic_error.
bool evalOverAtoms(const core::ExprPtr& e, const AtomTable& atoms,
                   const std::vector<bool>& assign);

std::string literalStr(const Literal& l, const AtomTable& atoms);
std::string clauseStr(const Clause& c, const AtomTable& atoms);
std::string guardReport(const core::Design& design, const GuardSet& gs);

}  // namespace bluec::guards
