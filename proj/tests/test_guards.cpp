#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>
#include <vector>

#include "helpers.hpp"
#include "vendor/doctest.h"

using namespace bluec;
using guards::AtomTable;
using guards::Cnf;

static core::ExprPtr reg(const std::string& name, int width = 8) {
  return core::mkRead(name, "_read", {}, width);
}
static core::ExprPtr cmp(core::BinOp op, const std::string& name, uint64_t k) {
  return core::mkBin(op, reg(name), core::mkConst(k, 8));
}

static bool evalCnf(const Cnf& c, const std::vector<bool>& assign) {
  for (const auto& clause : c.clauses) {
    bool sat = false;
    for (const auto& lit : clause)
      if (assign[static_cast<size_t>(lit.atom)] == lit.positive) {
        sat = true;
        break;
      }
    if (!sat) return false;
  }
  return true;
}

TEST_CASE("dual comparisons canonicalise to one atom") {
  AtomTable atoms;
  auto lt = atoms.atomOf(cmp(core::BinOp::Lt, "x", 5));
  auto ge = atoms.atomOf(cmp(core::BinOp::Ge, "x", 5));
  CHECK(lt.atom == ge.atom);
  CHECK(lt.positive != ge.positive);

  auto le = atoms.atomOf(cmp(core::BinOp::Le, "x", 5));
  auto gt = atoms.atomOf(cmp(core::BinOp::Gt, "x", 5));
  CHECK(le.atom == gt.atom);
  CHECK(le.positive != gt.positive);
  CHECK(le.atom != lt.atom);

  // Different operand trees stay distinct.
  auto other = atoms.atomOf(cmp(core::BinOp::Lt, "y", 5));
  CHECK(other.atom != lt.atom);
  CHECK(atoms.atomOf(cmp(core::BinOp::Lt, "x", 5)) == lt);
}

TEST_CASE("equalities and opaque reads intern structurally") {
  AtomTable atoms;
  auto a = atoms.atomOf(cmp(core::BinOp::Eq, "x", 3));
  auto b = atoms.atomOf(cmp(core::BinOp::Eq, "x", 3));
  auto c = atoms.atomOf(cmp(core::BinOp::Ne, "x", 3));
  CHECK(a == b);
  // Only the dual comparison pairs fold; anything else stays opaque.
  CHECK(c.atom != a.atom);
  CHECK(atoms.find(cmp(core::BinOp::Eq, "x", 4)) == std::nullopt);
}

TEST_CASE("cnf of simple shapes") {
  AtomTable atoms;
  auto A = cmp(core::BinOp::Lt, "x", 5);
  auto B = cmp(core::BinOp::Lt, "y", 5);

  auto t = guards::toCnf(core::mkBool(true), atoms);
  CHECK(t.clauses.empty());
  auto f = guards::toCnf(core::mkBool(false), atoms);
  REQUIRE(f.clauses.size() == 1);
  CHECK(f.clauses[0].empty());
  CHECK(guards::manifestlyFalse(f));

  auto conj = guards::toCnf(core::mkBin(core::BinOp::And, A, B), atoms);
  CHECK(conj.clauses.size() == 2);
  auto disj = guards::toCnf(core::mkBin(core::BinOp::Or, A, B), atoms);
  REQUIRE(disj.clauses.size() == 1);
  CHECK(disj.clauses[0].size() == 2);

  // Contradictions surface as manifest falsehood.
  auto contra = guards::toCnf(
      core::mkBin(core::BinOp::And, A, cmp(core::BinOp::Ge, "x", 5)), atoms);
  CHECK(guards::manifestlyFalse(contra));
}

TEST_CASE("cnf agrees with the original expression on all assignments") {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    AtomTable atoms;
    std::vector<core::ExprPtr> base;
    int nAtoms = 2 + static_cast<int>(rng() % 4);
    for (int k = 0; k < nAtoms; ++k)
      base.push_back(cmp(core::BinOp::Lt, "r" + std::to_string(k), 1 + rng() % 10));

    // Random single-bit tree over the base comparisons.
    std::function<core::ExprPtr(int)> build = [&](int depth) -> core::ExprPtr {
      if (depth == 0 || rng() % 3 == 0)
        return base[rng() % base.size()];
      switch (rng() % 4) {
        case 0: return core::mkUn(core::UnOp::Not, build(depth - 1));
        case 1:
          return core::mkBin(core::BinOp::And, build(depth - 1), build(depth - 1));
        case 2:
          return core::mkBin(core::BinOp::Or, build(depth - 1), build(depth - 1));
        default:
          return core::mkMux(build(depth - 1), build(depth - 1), build(depth - 1));
      }
    };
    auto e = build(3);
    auto cnf = guards::toCnf(e, atoms);
    size_t n = atoms.size();
    REQUIRE(n <= 6);
    for (uint64_t bits = 0; bits < (uint64_t{1} << n); ++bits) {
      std::vector<bool> assign(n);
      for (size_t k = 0; k < n; ++k) assign[k] = (bits >> k) & 1;
      CHECK(guards::evalOverAtoms(e, atoms, assign) == evalCnf(cnf, assign));
    }
  }
}

TEST_CASE("distribution beyond the clause budget collapses to an opaque atom") {
  AtomTable atoms;
  core::ExprPtr e;
  for (int k = 0; k < 6; ++k) {
    auto pair = core::mkBin(core::BinOp::And, cmp(core::BinOp::Lt, "a" + std::to_string(k), 3),
                            cmp(core::BinOp::Lt, "b" + std::to_string(k), 3));
    e = e ? core::mkBin(core::BinOp::Or, e, pair) : pair;
  }
  auto cnf = guards::toCnf(e, atoms, 4);
  REQUIRE(cnf.clauses.size() == 1);
  REQUIRE(cnf.clauses[0].size() == 1);
  // The whole expression became the atom.
  auto found = atoms.find(e);
  REQUIRE(found.has_value());
  CHECK(found->atom == cnf.clauses[0][0].atom);
}

TEST_CASE("exclusivity and implication facts") {
  AtomTable atoms;
  auto A = cmp(core::BinOp::Lt, "x", 5);
  auto notA = cmp(core::BinOp::Ge, "x", 5);
  auto B = cmp(core::BinOp::Lt, "y", 5);

  auto cA = guards::toCnf(A, atoms);
  auto cNotA = guards::toCnf(notA, atoms);
  auto cB = guards::toCnf(B, atoms);
  auto cAB = guards::toCnf(core::mkBin(core::BinOp::And, A, B), atoms);
  auto cAorB = guards::toCnf(core::mkBin(core::BinOp::Or, A, B), atoms);

  CHECK(guards::mutuallyExclusive(cA, cNotA));
  CHECK(guards::mutuallyExclusive(cAB, cNotA));
  CHECK(!guards::mutuallyExclusive(cA, cB));
  CHECK(!guards::mutuallyExclusive(cA, cA));

  CHECK(guards::implies(cAB, cA));
  CHECK(guards::implies(cAB, cB));
  CHECK(guards::implies(cA, cAorB));
  CHECK(!guards::implies(cA, cAB));
  CHECK(!guards::implies(cAorB, cA));
}

TEST_CASE("composite guards conjoin explicit and readiness parts") {
  auto p = testutil::compileFile("tb2.bsv");
  int fill = p.design.ruleIndex("fill");
  int drain = p.design.ruleIndex("drain");
  REQUIRE(fill >= 0);
  REQUIRE(drain >= 0);

  auto hasReady = [&](int ri, const std::string& method) {
    const auto& g = p.gs.guards[static_cast<size_t>(ri)];
    for (const auto& clause : g.cnf.clauses)
      for (const auto& lit : clause) {
        const auto& e = p.gs.atoms.expr(lit.atom);
        if (e->kind == core::Expr::Kind::Ready && e->method == method) return true;
      }
    return false;
  };
  CHECK(hasReady(fill, "send"));
  CHECK(hasReady(drain, "receive"));
  CHECK(!hasReady(fill, "receive"));

  for (const auto& g : p.gs.guards)
    CHECK(g.provenance.size() == g.cnf.clauses.size());
}

TEST_CASE("always-ready register traffic adds no readiness clauses") {
  auto p = testutil::compileFile("counter.bsv");
  for (const auto& g : p.gs.guards)
    for (const auto& clause : g.cnf.clauses)
      for (const auto& lit : clause)
        CHECK(p.gs.atoms.expr(lit.atom)->kind != core::Expr::Kind::Ready);
}

TEST_CASE("non-strict mode qualifies readiness by its branch condition") {
  const std::string src = testutil::readFile(testutil::corpusPath("nonstrict.bsv"));
  auto strict = testutil::compileSource("nonstrict.bsv", src, {});
  testutil::PipelineOptions looseOpt;
  looseOpt.nonStrict = true;
  auto loose = testutil::compileSource("nonstrict.bsv", src, looseOpt);

  int ri = strict.design.ruleIndex("step");
  REQUIRE(ri >= 0);

  auto readyClause = [&](const testutil::Pipeline& p) {
    const auto& g = p.gs.guards[static_cast<size_t>(ri)];
    for (const auto& clause : g.cnf.clauses)
      for (const auto& lit : clause)
        if (p.gs.atoms.expr(lit.atom)->kind == core::Expr::Kind::Ready)
          return clause;
    return guards::Clause{};
  };
  auto sc = readyClause(strict);
  auto lc = readyClause(loose);
  REQUIRE(!sc.empty());
  REQUIRE(!lc.empty());
  CHECK(sc.size() == 1);  // unconditional: the fifo must be readable
  CHECK(lc.size() == 2);  // weakened: readable or the branch not taken
}

TEST_CASE("the strict composite guard implies the non-strict one") {
  for (const auto& name : {"nonstrict.bsv", "tb2.bsv", "fifo2.bsv", "ram.bsv"}) {
    INFO("design: " << std::string(name));
    const std::string src = testutil::readFile(testutil::corpusPath(name));
    auto strict = testutil::compileSource(name, src, {});
    testutil::PipelineOptions looseOpt;
    looseOpt.nonStrict = true;
    auto loose = testutil::compileSource(name, src, looseOpt);
    REQUIRE(strict.design.rules.size() == loose.design.rules.size());

    for (size_t r = 0; r < strict.design.rules.size(); ++r) {
      AtomTable shared;
      auto se = strict.gs.guards[r].expr;
      auto le = loose.gs.guards[r].expr;
      guards::toCnf(se, shared);
      guards::toCnf(le, shared);
      size_t n = shared.size();
      REQUIRE(n <= 12);
      for (uint64_t bits = 0; bits < (uint64_t{1} << n); ++bits) {
        std::vector<bool> assign(n);
        for (size_t k = 0; k < n; ++k) assign[k] = (bits >> k) & 1;
        if (guards::evalOverAtoms(se, shared, assign))
          CHECK(guards::evalOverAtoms(le, shared, assign));
      }
    }
  }
}

TEST_CASE("evaluation rejects expressions with uninterned atoms") {
  AtomTable atoms;
  guards::toCnf(cmp(core::BinOp::Lt, "x", 5), atoms);
  CHECK_THROWS_AS(
      guards::evalOverAtoms(cmp(core::BinOp::Lt, "z", 9), atoms, {false}),
      std::logic_error);
}

TEST_CASE("literal and clause rendering is stable") {
  AtomTable atoms;
  auto l = atoms.atomOf(cmp(core::BinOp::Lt, "x", 5));
  auto neg = l;
  neg.positive = !neg.positive;
  CHECK(guards::literalStr(l, atoms) == "(x._read() < 5)");
  CHECK(guards::literalStr(neg, atoms) == "!(x._read() < 5)");
  CHECK(guards::clauseStr({l, neg}, atoms) == "{(x._read() < 5) | !(x._read() < 5)}");
}
