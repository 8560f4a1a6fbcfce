#include "bluec/elaborate.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bluec/diag.hpp"
#include "bluec/primitives.hpp"

namespace bluec {

using namespace ast;

namespace {

struct ModuleView;

// A user method awaiting inlining: its definition plus the scope of the
// module instance that defines it.
struct MethodInfo {
  const Stmt* def = nullptr;
  std::shared_ptr<ModuleView> owner;
  std::string qualName;
};

// What a name denotes during elaboration.
struct Value {
  enum class Kind { Static, Runtime, Prim, Module, Method };
  Kind kind = Kind::Static;
  uint64_t num = 0;                    // Static
  core::ExprPtr expr;                  // Runtime
  std::string prim;                    // Prim: instance path
  std::shared_ptr<ModuleView> view;    // Module
  std::shared_ptr<MethodInfo> method;  // Method
};

// Scope of one elaborated module instance. Mutated in place while the module
// body is processed; methods of the module capture it by reference so their
// bodies resolve names against the defining instance.
struct ModuleView {
  std::string prefix;  // instance path prefix, "" for the top, "sub." below it
  std::map<std::string, Value> names;
};

struct Env {
  ModuleView* view = nullptr;
  std::map<std::string, Value> locals;  // rule/method-local bindings

  const Value* find(const std::string& n) const {
    auto it = locals.find(n);
    if (it != locals.end()) return &it->second;
    auto jt = view->names.find(n);
    if (jt != view->names.end()) return &jt->second;
    return nullptr;
  }
};

// Context while elaborating expressions and statements inside one rule.
struct RuleCtx {
  core::Rule* rule = nullptr;
  Env* env = nullptr;
  core::ExprPtr when;  // nullptr = unconditional
  std::vector<std::pair<core::ExprPtr, bool>> whenParts;
  bool allowActions = false;
  core::ExprPtr* returnSlot = nullptr;  // non-null inside value/action-value methods
  bool returnSeen = false;
};

struct ModCtx {
  Env env;
  std::string prefix;
  int fsmCount = 0;
  int bufCount = 0;
};

struct LoopCtx {
  int continueTarget = 0;
  int breakTarget = 0;
};

struct Machine {
  std::string name;  // state register path; also the rule-name stem
  int total = 0;     // states 0..total-1 carry rules; total is the done state
  int width = 0;
};

int bitsFor(uint64_t maxValue) {
  int w = 1;
  while (w < 64 && (uint64_t{1} << w) <= maxValue) ++w;
  return w;
}

std::string joinPath(const std::vector<std::string>& path, size_t upto) {
  std::string s;
  for (size_t i = 0; i <= upto && i < path.size(); ++i) {
    if (i) s += ".";
    s += path[i];
  }
  return s;
}

std::vector<std::string> splitList(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    size_t b = s.find_first_not_of(" \t");
    size_t e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }
  return out;
}

class Elaborator {
 public:
  explicit Elaborator(const SurfaceAst& unit) : unit_(unit) {}

  core::Design run(const std::string& topName, core::GuardMode mode) {
    design_.top = topName;
    design_.guardMode = mode;
    const ModuleDef* top = findModule(topName);
    if (!top) throw CompileError({}, "unknown top module '" + topName + "'");
    if (top->ifcName != "Empty")
      throw CompileError(top->loc,
                         "top module '" + topName + "' must implement the Empty interface");
    if (!top->params.empty())
      throw CompileError(top->loc, "top module '" + topName + "' must not take parameters");
    elabModule(*top, "", {}, top->loc);
    postChecks();
    return std::move(design_);
  }

 private:
  const SurfaceAst& unit_;
  core::Design design_;
  std::vector<std::shared_ptr<ModuleView>> views_;
  std::vector<std::string> moduleStack_;
  std::vector<std::string> inlineStack_;
  std::vector<std::pair<std::string, SourceLoc>> firingRefs_;
  std::string staticFail_;

  // ---- lookup helpers ----------------------------------------------------

  const ModuleDef* findModule(const std::string& name) const {
    for (const auto& m : unit_.modules)
      if (m.name == name) return &m;
    return nullptr;
  }

  void addInstance(core::Instance inst) {
    if (design_.instance(inst.path))
      throw CompileError(inst.loc, "duplicate instance name '" + inst.path + "'");
    design_.instances.push_back(std::move(inst));
  }

  void addRule(core::Rule rule) {
    if (design_.ruleIndex(rule.name) >= 0)
      throw CompileError(rule.loc, "duplicate rule name '" + rule.name + "'");
    checkCallSites(rule);
    design_.rules.push_back(std::move(rule));
  }

  // Two enable-bearing calls to one method within one rule must carry
  // provably disjoint branch conditions: a shared condition expression with
  // opposite polarity.
  static bool disjointParts(const std::vector<std::pair<core::ExprPtr, bool>>& a,
                            const std::vector<std::pair<core::ExprPtr, bool>>& b) {
    for (const auto& [ea, pa] : a)
      for (const auto& [eb, pb] : b)
        if (pa != pb && core::exprStr(ea) == core::exprStr(eb)) return true;
    return false;
  }

  void checkCallSites(const core::Rule& rule) const {
    for (size_t i = 0; i < rule.actions.size(); ++i) {
      const auto& a = rule.actions[i];
      if (a.kind != core::Action::Kind::Call) continue;
      for (size_t j = i + 1; j < rule.actions.size(); ++j) {
        const auto& b = rule.actions[j];
        if (b.kind != core::Action::Kind::Call) continue;
        if (a.path != b.path || a.method != b.method) continue;
        if (!disjointParts(a.whenParts, b.whenParts))
          throw CompileError(
              b.loc, "rule '" + rule.name + "' calls " + a.path + "." + a.method +
                         " more than once without mutually exclusive conditions");
      }
    }
  }

  // ---- static evaluation ---------------------------------------------------

  std::optional<uint64_t> staticSizeof(const Exp& e) {
    if (e.args.size() != 1) return std::nullopt;
    const Exp& a = *e.args[0];
    if (a.kind == Exp::Kind::Var || a.kind == Exp::Kind::IfcRef) {
      if (a.name == "int") return 32;
      if (a.name == "Bool") return 1;
    }
    if (a.kind == Exp::Kind::Apply && a.applyPath.size() == 1 &&
        (a.applyPath[0] == "UInt" || a.applyPath[0] == "Bit") && a.args.size() == 1 &&
        a.args[0]->kind == Exp::Kind::Num)
      return a.args[0]->num;
    return std::nullopt;
  }

  std::optional<uint64_t> staticExp(const Env& env, const Exp& e) {
    switch (e.kind) {
      case Exp::Kind::Num:
        return e.num;
      case Exp::Kind::BoolLift: {
        auto b = staticBexp(env, *e.cond);
        if (!b) return std::nullopt;
        return *b ? 1 : 0;
      }
      case Exp::Kind::Query: {
        auto c = staticBexp(env, *e.cond);
        if (!c) return std::nullopt;
        return staticExp(env, *c ? *e.a : *e.b);
      }
      case Exp::Kind::Var:
      case Exp::Kind::IfcRef: {
        const Value* v = env.find(e.name);
        if (v && v->kind == Value::Kind::Static) return v->num;
        if (staticFail_.empty()) staticFail_ = e.name;
        return std::nullopt;
      }
      case Exp::Kind::Diadic: {
        auto a = staticExp(env, *e.a);
        auto b = staticExp(env, *e.b);
        if (!a || !b) return std::nullopt;
        switch (e.diop) {
          case DiOp::Add: return *a + *b;
          case DiOp::Sub: return *a - *b;
          case DiOp::Mul: return *a * *b;
        }
        return std::nullopt;
      }
      case Exp::Kind::Apply:
        if (e.applyPath.size() == 1 && e.applyPath[0] == "sizeof") return staticSizeof(e);
        if (staticFail_.empty()) staticFail_ = joinPath(e.applyPath, e.applyPath.size());
        return std::nullopt;
      case Exp::Kind::Str:
      case Exp::Kind::Fsm:
        return std::nullopt;
    }
    return std::nullopt;
  }

  std::optional<bool> staticBexp(const Env& env, const BExp& b) {
    switch (b.kind) {
      case BExp::Kind::True:
        return true;
      case BExp::Kind::False:
        return false;
      case BExp::Kind::Firing:
        if (staticFail_.empty()) staticFail_ = "firing(" + b.name + ")";
        return std::nullopt;
      case BExp::Kind::Not: {
        auto t = staticBexp(env, *b.terms[0]);
        if (!t) return std::nullopt;
        return !*t;
      }
      case BExp::Kind::And:
      case BExp::Kind::Or: {
        bool isAnd = b.kind == BExp::Kind::And;
        bool acc = isAnd;
        for (const auto& t : b.terms) {
          auto v = staticBexp(env, *t);
          if (!v) return std::nullopt;
          acc = isAnd ? (acc && *v) : (acc || *v);
        }
        return acc;
      }
      case BExp::Kind::Cmp: {
        auto a = staticExp(env, *b.operands[0]);
        auto c = staticExp(env, *b.operands[1]);
        if (!a || !c) return std::nullopt;
        switch (b.cmp) {
          case CmpOp::Lt: return *a < *c;
          case CmpOp::Le: return *a <= *c;
          case CmpOp::Gt: return *a > *c;
          case CmpOp::Ge: return *a >= *c;
          case CmpOp::Eq: return *a == *c;
          case CmpOp::Ne: return *a != *c;
        }
        return std::nullopt;
      }
      case BExp::Kind::Orred: {
        auto v = staticExp(env, *b.operands[0]);
        if (!v) return std::nullopt;
        return *v != 0;
      }
    }
    return std::nullopt;
  }

  uint64_t requireStatic(const Env& env, const Exp& e, const char* what) {
    staticFail_.clear();
    auto v = staticExp(env, e);
    if (!v)
      throw CompileError(e.loc, std::string(what) + " is not static" +
                                    (staticFail_.empty() ? "" : ": '" + staticFail_ + "'"));
    return *v;
  }

  bool requireStaticBool(const Env& env, const BExp& b, const char* what) {
    staticFail_.clear();
    auto v = staticBexp(env, b);
    if (!v)
      throw CompileError(b.loc, std::string(what) + " is not static" +
                                    (staticFail_.empty() ? "" : ": '" + staticFail_ + "'"));
    return *v;
  }

  // ---- types --------------------------------------------------------------

  int typeWidth(const TypeRef& t) const {
    if (t.name == "int") return 32;
    if (t.name == "Bool") return 1;
    if ((t.name == "UInt" || t.name == "Bit") && t.num >= 0) {
      if (t.num < 1 || t.num > 64)
        throw CompileError(t.loc, "width must be in 1..64, got " + std::to_string(t.num));
      return t.num;
    }
    throw CompileError(t.loc, "type '" + t.name + "' has no known width");
  }

  int elemWidthOr32(const TypeRef& t) const { return t.elem ? typeWidth(*t.elem) : 32; }

  // ---- instantiation --------------------------------------------------------

  std::shared_ptr<ModuleView> elabModule(const ModuleDef& mod, const std::string& prefix,
                                         const std::vector<Value>& actuals, SourceLoc instLoc) {
    for (const auto& name : moduleStack_)
      if (name == mod.name)
        throw CompileError(instLoc, "recursive instantiation of module '" + mod.name + "'");
    moduleStack_.push_back(mod.name);

    auto view = std::make_shared<ModuleView>();
    view->prefix = prefix;
    views_.push_back(view);

    if (actuals.size() != mod.params.size())
      throw CompileError(instLoc, "module '" + mod.name + "' takes " +
                                      std::to_string(mod.params.size()) + " parameter(s), got " +
                                      std::to_string(actuals.size()));
    for (size_t i = 0; i < actuals.size(); ++i)
      view->names[mod.params[i].second] = actuals[i];

    // Pre-register methods so rules may call methods defined later in the body.
    for (const auto& s : mod.body) {
      if (s->kind != Stmt::Kind::MethodDef) continue;
      registerMethod(*view, view, *s);
    }

    ModCtx mc;
    mc.env.view = view.get();
    mc.prefix = prefix;

    applyAttrs(mod.attrs, "", prefix);
    for (const auto& s : mod.body) elabModuleStmt(mc, *s);

    moduleStack_.pop_back();
    return view;
  }

  void registerMethod(ModuleView& names, const std::shared_ptr<ModuleView>& owner,
                      const Stmt& def) {
    auto it = names.names.find(def.name);
    if (it != names.names.end()) {
      if (it->second.kind == Value::Kind::Method && it->second.method->def == &def) return;
      throw CompileError(def.loc, "duplicate name '" + def.name + "'");
    }
    Value v;
    v.kind = Value::Kind::Method;
    v.method = std::make_shared<MethodInfo>();
    v.method->def = &def;
    v.method->owner = owner;
    v.method->qualName = names.prefix + def.name;
    names.names[def.name] = v;
  }

  void elabModuleStmt(ModCtx& mc, const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::VarDeclAssign:
        elabVarDecl(mc, s);
        return;
      case Stmt::Kind::Rule:
        elabRule(mc, s);
        return;
      case Stmt::Kind::Assign: {
        if (mc.env.view->names.count(s.name)) {
          Value& old = mc.env.view->names[s.name];
          if (old.kind != Value::Kind::Static && old.kind != Value::Kind::Runtime)
            throw CompileError(s.loc, "name '" + s.name + "' is already bound");
        }
        staticFail_.clear();
        if (auto v = staticExp(mc.env, *s.value)) {
          Value val;
          val.kind = Value::Kind::Static;
          val.num = *v;
          mc.env.view->names[s.name] = val;
        } else {
          RuleCtx ctx;
          ctx.env = &mc.env;
          Value val;
          val.kind = Value::Kind::Runtime;
          val.expr = elabExp(ctx, *s.value);
          mc.env.view->names[s.name] = val;
        }
        return;
      }
      case Stmt::Kind::ActionCall:
        if (s.value->kind == Exp::Kind::Fsm) {
          elabFsm(mc, s.value->fsm, s.loc);
          return;
        }
        throw CompileError(s.loc, "actions must appear inside a rule");
      case Stmt::Kind::Pli:
        throw CompileError(s.loc, "system task calls must appear inside a rule");
      case Stmt::Kind::BeginEnd:
        for (const auto& c : s.body) elabModuleStmt(mc, *c);
        return;
      case Stmt::Kind::If: {
        bool c = requireStaticBool(mc.env, *s.cond, "elaboration-time condition");
        if (c)
          elabModuleStmt(mc, *s.thenS);
        else if (s.elseS)
          elabModuleStmt(mc, *s.elseS);
        return;
      }
      case Stmt::Kind::While: {
        int guardCount = 0;
        while (requireStaticBool(mc.env, *s.cond, "elaboration-time loop condition")) {
          if (++guardCount > 1000000)
            throw CompileError(s.loc, "elaboration loop did not terminate within 1000000 iterations");
          elabModuleStmt(mc, *s.thenS);
        }
        return;
      }
      case Stmt::Kind::Case: {
        uint64_t subj = requireStatic(mc.env, *s.subject, "elaboration-time case subject");
        for (const auto& [label, arm] : s.caseArms) {
          uint64_t lv = requireStatic(mc.env, *label, "case label");
          if (lv == subj) {
            elabModuleStmt(mc, *arm);
            return;
          }
        }
        if (s.caseDefault) elabModuleStmt(mc, *s.caseDefault);
        return;
      }
      case Stmt::Kind::MethodDef:
        // Top-level definitions were pre-registered; nested ones land here.
        for (auto& v : views_)
          if (v.get() == mc.env.view) {
            registerMethod(*v, v, s);
            return;
          }
        throw CompileError(s.loc, "internal: method scope not found");
      case Stmt::Kind::PrimBuffer: {
        RuleCtx ctx;
        ctx.env = &mc.env;
        core::CombBuffer buf;
        buf.name = mc.prefix + "buf" + std::to_string(mc.bufCount++);
        buf.expr = elabExp(ctx, *s.args[0]);
        buf.unused = elabExp(ctx, *s.args[1]);
        buf.loc = s.loc;
        design_.buffers.push_back(std::move(buf));
        return;
      }
      case Stmt::Kind::Return:
        throw CompileError(s.loc, "return is not allowed at module level");
      case Stmt::Kind::RegWrite:
        throw CompileError(s.loc, "internal: register write not desugared");
    }
  }

  Value staticOrHandleArg(ModCtx& mc, const Exp& arg, const char* what) {
    if (arg.kind == Exp::Kind::IfcRef) {
      const Value* v = mc.env.find(arg.name);
      if (!v) throw CompileError(arg.loc, "unknown identifier '" + arg.name + "'");
      return *v;
    }
    Value v;
    v.kind = Value::Kind::Static;
    v.num = requireStatic(mc.env, arg, what);
    return v;
  }

  uint64_t staticArg(ModCtx& mc, const Exp& arg, const char* what) {
    Value v = staticOrHandleArg(mc, arg, what);
    if (v.kind != Value::Kind::Static)
      throw CompileError(arg.loc, std::string(what) + " must be a static value");
    return v.num;
  }

  void elabVarDecl(ModCtx& mc, const Stmt& s) {
    if (mc.env.view->names.count(s.name))
      throw CompileError(s.loc, "duplicate name '" + s.name + "'");
    std::string path = mc.prefix + s.name;
    const std::string& ctor = s.ctor;

    auto bindPrim = [&](core::Instance inst) {
      addInstance(std::move(inst));
      Value v;
      v.kind = Value::Kind::Prim;
      v.prim = path;
      mc.env.view->names[s.name] = v;
    };

    if (ctor == "mkReg" || ctor == "mk_register") {
      if (!s.declType.elem)
        throw CompileError(s.loc, "register declaration needs an element type, e.g. Reg#(UInt(8))");
      int width = typeWidth(*s.declType.elem);
      if (s.ctorArgs.size() > 1)
        throw CompileError(s.loc, ctor + " takes at most one argument (the reset value)");
      uint64_t reset =
          s.ctorArgs.empty() ? 0 : staticArg(mc, *s.ctorArgs[0], "register reset value");
      bindPrim(prim::makeRegister(path, width, reset, s.loc));
      return;
    }
    if (ctor == "mkFIFO") {
      int width = elemWidthOr32(s.declType);
      if (s.ctorArgs.size() > 1)
        throw CompileError(s.loc, "mkFIFO takes at most one argument (the depth)");
      int depth =
          s.ctorArgs.empty() ? 2 : static_cast<int>(staticArg(mc, *s.ctorArgs[0], "fifo depth"));
      bindPrim(prim::makeFifo(path, width, depth, s.loc));
      return;
    }
    if (ctor == "mkPipe") {
      if (!s.ctorArgs.empty()) throw CompileError(s.loc, "mkPipe takes no arguments");
      bindPrim(prim::makePipe(path, elemWidthOr32(s.declType), s.loc));
      return;
    }
    if (ctor == "mkSyncRAM") {
      if (s.ctorArgs.size() != 1)
        throw CompileError(s.loc, "mkSyncRAM takes exactly one argument (the address width)");
      int aw = static_cast<int>(staticArg(mc, *s.ctorArgs[0], "ram address width"));
      bindPrim(prim::makeSyncRam(path, elemWidthOr32(s.declType), aw, s.loc));
      return;
    }
    if (const ModuleDef* sub = findModule(ctor)) {
      std::vector<Value> actuals;
      for (const auto& a : s.ctorArgs)
        actuals.push_back(staticOrHandleArg(mc, *a, "module argument"));
      auto view = elabModule(*sub, path + ".", actuals, s.loc);
      Value v;
      v.kind = Value::Kind::Module;
      v.view = view;
      mc.env.view->names[s.name] = v;
      return;
    }
    throw CompileError(s.loc, "unknown constructor '" + ctor + "'");
  }

  // ---- annotations ----------------------------------------------------------

  std::vector<std::string> qualifyList(const Attr& a, const std::string& prefix) {
    std::vector<std::string> names = splitList(a.value);
    for (auto& n : names) {
      if (n.empty())
        throw CompileError(a.loc, "empty rule name in '" + a.name + "' annotation");
      n = prefix + n;
    }
    if (names.size() < 2)
      throw CompileError(a.loc, "'" + a.name + "' needs at least two rule names");
    return names;
  }

  void applyAttrs(const std::vector<Attr>& attrs, const std::string& currentRule,
                  const std::string& prefix) {
    for (const auto& a : attrs) {
      if (a.name == "descending_urgency") {
        design_.annotations.urgency.push_back(qualifyList(a, prefix));
        annotationRefs_.emplace_back(design_.annotations.urgency.back(), a.loc);
      } else if (a.name == "execution_order") {
        design_.annotations.executionOrder.push_back(qualifyList(a, prefix));
        annotationRefs_.emplace_back(design_.annotations.executionOrder.back(), a.loc);
      } else if (a.name == "fire_when_enabled") {
        if (!a.value.empty()) {
          for (auto& n : splitList(a.value)) {
            if (n.empty()) throw CompileError(a.loc, "empty rule name in annotation");
            design_.annotations.fireWhenEnabled.push_back(prefix + n);
            annotationRefs_.push_back({{prefix + n}, a.loc});
          }
        } else if (!currentRule.empty()) {
          design_.annotations.fireWhenEnabled.push_back(currentRule);
        } else {
          throw CompileError(a.loc, "fire_when_enabled at module level needs a rule list");
        }
      } else {
        throw CompileError(a.loc, "attribute '" + a.name + "' only applies to interface methods");
      }
    }
  }

  // ---- rules -----------------------------------------------------------------

  void elabRule(ModCtx& mc, const Stmt& s) {
    core::Rule rule;
    rule.name = mc.prefix + s.name;
    rule.loc = s.loc;
    applyAttrs(s.attrs, rule.name, mc.prefix);

    Env ruleEnv;
    ruleEnv.view = mc.env.view;
    RuleCtx ctx;
    ctx.rule = &rule;
    ctx.env = &ruleEnv;

    ctx.allowActions = false;
    rule.guard = elabBexp(ctx, *s.guard);

    ctx.allowActions = true;
    for (const auto& b : s.body) elabStmt(ctx, *b);

    addRule(std::move(rule));
  }

  void elabStmt(RuleCtx& ctx, const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::Assign: {
        staticFail_.clear();
        Value val;
        if (auto v = staticExp(*ctx.env, *s.value)) {
          val.kind = Value::Kind::Static;
          val.num = *v;
        } else {
          val.kind = Value::Kind::Runtime;
          val.expr = elabExp(ctx, *s.value);
        }
        ctx.env->locals[s.name] = val;
        return;
      }
      case Stmt::Kind::ActionCall: {
        if (s.value->kind == Exp::Kind::Fsm)
          throw CompileError(s.loc, "FSM statements must appear at module level");
        if (s.value->kind != Exp::Kind::Apply)
          throw CompileError(s.loc, "expression statement must be a method or task call");
        auto v = elabApply(ctx, *s.value, /*statement=*/true);
        (void)v;  // a discarded action-value result is fine
        return;
      }
      case Stmt::Kind::Pli:
        emitPli(ctx, s.pli, s.args, s.loc);
        return;
      case Stmt::Kind::BeginEnd: {
        auto saved = ctx.env->locals;
        for (const auto& c : s.body) elabStmt(ctx, *c);
        ctx.env->locals = std::move(saved);
        return;
      }
      case Stmt::Kind::If: {
        staticFail_.clear();
        if (auto c = staticBexp(*ctx.env, *s.cond)) {
          if (*c)
            elabStmt(ctx, *s.thenS);
          else if (s.elseS)
            elabStmt(ctx, *s.elseS);
          return;
        }
        core::ExprPtr cond = elabBexp(ctx, *s.cond);
        withBranch(ctx, cond, true, [&] { elabStmt(ctx, *s.thenS); });
        if (s.elseS) withBranch(ctx, cond, false, [&] { elabStmt(ctx, *s.elseS); });
        return;
      }
      case Stmt::Kind::While: {
        int iter = 0;
        while (requireStaticBool(*ctx.env, *s.cond, "loop condition inside a rule")) {
          if (++iter > 1000000)
            throw CompileError(s.loc, "elaboration loop did not terminate within 1000000 iterations");
          elabStmt(ctx, *s.thenS);
        }
        return;
      }
      case Stmt::Kind::Case:
        elabCase(ctx, s);
        return;
      case Stmt::Kind::Return: {
        if (!ctx.returnSlot)
          throw CompileError(s.loc, "return is only allowed in a method body");
        if (ctx.returnSeen) throw CompileError(s.loc, "method returns more than once");
        if (ctx.when)
          throw CompileError(s.loc, "conditional return is not supported");
        *ctx.returnSlot = elabExp(ctx, *s.value);
        ctx.returnSeen = true;
        return;
      }
      case Stmt::Kind::Rule:
        throw CompileError(s.loc, "rules cannot be nested");
      case Stmt::Kind::VarDeclAssign:
        throw CompileError(s.loc, "instantiation must appear at module level");
      case Stmt::Kind::MethodDef:
        throw CompileError(s.loc, "method definitions must appear at module level");
      case Stmt::Kind::PrimBuffer:
        throw CompileError(s.loc, "primBuffer must appear at module level");
      case Stmt::Kind::RegWrite:
        throw CompileError(s.loc, "internal: register write not desugared");
    }
  }

  // Runs body with the given branch conditions in effect, each recorded as a
  // separate (condition, polarity) part so disjointness of sibling branches
  // stays visible to the duplicate-call check.
  template <typename F>
  void withParts(RuleCtx& ctx, const std::vector<std::pair<core::ExprPtr, bool>>& parts, F body) {
    core::ExprPtr prevWhen = ctx.when;
    for (const auto& [cond, polarity] : parts) {
      core::ExprPtr lit = polarity ? cond : core::mkUn(core::UnOp::Not, cond);
      ctx.when = core::andAlso(ctx.when, lit);
      ctx.whenParts.emplace_back(cond, polarity);
    }
    auto savedLocals = ctx.env->locals;
    body();
    ctx.env->locals = std::move(savedLocals);
    for (size_t k = 0; k < parts.size(); ++k) ctx.whenParts.pop_back();
    ctx.when = prevWhen;
  }

  template <typename F>
  void withBranch(RuleCtx& ctx, const core::ExprPtr& cond, bool polarity, F body) {
    withParts(ctx, {{cond, polarity}}, body);
  }

  void elabCase(RuleCtx& ctx, const Stmt& s) {
    staticFail_.clear();
    auto subjStatic = staticExp(*ctx.env, *s.subject);
    bool allLabelsStatic = true;
    std::vector<std::optional<uint64_t>> labels;
    for (const auto& [label, arm] : s.caseArms) {
      staticFail_.clear();
      labels.push_back(staticExp(*ctx.env, *label));
      if (!labels.back()) allLabelsStatic = false;
    }
    if (subjStatic && allLabelsStatic) {
      for (size_t i = 0; i < s.caseArms.size(); ++i)
        if (*labels[i] == *subjStatic) {
          elabStmt(ctx, *s.caseArms[i].second);
          return;
        }
      if (s.caseDefault) elabStmt(ctx, *s.caseDefault);
      return;
    }
    core::ExprPtr subj = elabExp(ctx, *s.subject);
    std::vector<std::pair<core::ExprPtr, bool>> misses;  // (subj == label_j, false) so far
    for (const auto& [label, arm] : s.caseArms) {
      core::ExprPtr lv = elabExp(ctx, *label);
      core::ExprPtr eq = core::mkBin(core::BinOp::Eq, subj, lv, label->loc);
      auto parts = misses;
      parts.emplace_back(eq, true);
      withParts(ctx, parts, [&] { elabStmt(ctx, *arm); });
      misses.emplace_back(eq, false);
    }
    if (s.caseDefault) {
      if (misses.empty()) {
        elabStmt(ctx, *s.caseDefault);
      } else {
        withParts(ctx, misses, [&] { elabStmt(ctx, *s.caseDefault); });
      }
    }
  }

  void emitPli(RuleCtx& ctx, const std::string& name, const std::vector<ExpPtr>& args,
               SourceLoc loc) {
    if (name != "$display" && name != "$finish")
      throw CompileError(loc, "unknown system task '" + name + "'");
    if (!ctx.allowActions || !ctx.rule)
      throw CompileError(loc, "system task calls are not allowed here");
    if (name == "$finish" && args.size() > 1)
      throw CompileError(loc, "$finish takes at most one argument");
    core::Action act;
    act.kind = core::Action::Kind::Pli;
    act.pli = name;
    act.when = ctx.when;
    act.whenParts = ctx.whenParts;
    act.loc = loc;
    for (const auto& a : args) act.args.push_back(elabExp(ctx, *a));
    ctx.rule->actions.push_back(std::move(act));
  }

  // ---- expressions -------------------------------------------------------------

  core::ExprPtr elabExp(RuleCtx& ctx, const Exp& e) {
    switch (e.kind) {
      case Exp::Kind::Num: {
        int width = e.numWidth > 0 ? e.numWidth : (e.num >> 32 ? 64 : 32);
        return core::mkConst(e.num, width, e.loc);
      }
      case Exp::Kind::BoolLift:
        return elabBexp(ctx, *e.cond);
      case Exp::Kind::Query:
        return core::mkMux(elabBexp(ctx, *e.cond), elabExp(ctx, *e.a), elabExp(ctx, *e.b), e.loc);
      case Exp::Kind::Var: {
        const Value* v = ctx.env->find(e.name);
        if (!v) throw CompileError(e.loc, "unknown identifier '" + e.name + "'");
        switch (v->kind) {
          case Value::Kind::Static:
            return core::mkConst(v->num, v->num >> 32 ? 64 : 32, e.loc);
          case Value::Kind::Runtime:
            return v->expr;
          case Value::Kind::Prim:
          case Value::Kind::Module:
            throw CompileError(e.loc, "instance '" + e.name + "' cannot be used as a value");
          case Value::Kind::Method:
            throw CompileError(e.loc, "method '" + e.name + "' must be called with arguments");
        }
        return nullptr;
      }
      case Exp::Kind::Str:
        return core::mkStr(e.str, e.loc);
      case Exp::Kind::Fsm:
        throw CompileError(e.loc, "FSM statements must appear at module level");
      case Exp::Kind::IfcRef:
        throw CompileError(e.loc, "interface reference is only valid as a constructor argument");
      case Exp::Kind::Diadic: {
        core::BinOp op = e.diop == DiOp::Add   ? core::BinOp::Add
                         : e.diop == DiOp::Sub ? core::BinOp::Sub
                                               : core::BinOp::Mul;
        return core::mkBin(op, elabExp(ctx, *e.a), elabExp(ctx, *e.b), e.loc);
      }
      case Exp::Kind::Apply: {
        auto v = elabApply(ctx, e, /*statement=*/false);
        if (!v)
          throw CompileError(e.loc, "action method '" + joinPath(e.applyPath, e.applyPath.size()) +
                                        "' produces no value");
        return *v;
      }
    }
    throw CompileError(e.loc, "internal: unhandled expression");
  }

  core::ExprPtr elabBexp(RuleCtx& ctx, const BExp& b) {
    switch (b.kind) {
      case BExp::Kind::True:
        return core::mkBool(true, b.loc);
      case BExp::Kind::False:
        return core::mkBool(false, b.loc);
      case BExp::Kind::Firing: {
        std::string qual = ctx.env->view->prefix + b.name;
        firingRefs_.emplace_back(qual, b.loc);
        return core::mkFiring(qual, b.loc);
      }
      case BExp::Kind::Not:
        return core::mkUn(core::UnOp::Not, elabBexp(ctx, *b.terms[0]), b.loc);
      case BExp::Kind::And:
      case BExp::Kind::Or: {
        core::BinOp op = b.kind == BExp::Kind::And ? core::BinOp::And : core::BinOp::Or;
        core::ExprPtr acc = elabBexp(ctx, *b.terms[0]);
        for (size_t i = 1; i < b.terms.size(); ++i)
          acc = core::mkBin(op, acc, elabBexp(ctx, *b.terms[i]), b.loc);
        return acc;
      }
      case BExp::Kind::Cmp: {
        core::BinOp op;
        switch (b.cmp) {
          case CmpOp::Lt: op = core::BinOp::Lt; break;
          case CmpOp::Le: op = core::BinOp::Le; break;
          case CmpOp::Gt: op = core::BinOp::Gt; break;
          case CmpOp::Ge: op = core::BinOp::Ge; break;
          case CmpOp::Eq: op = core::BinOp::Eq; break;
          case CmpOp::Ne: op = core::BinOp::Ne; break;
          default: op = core::BinOp::Lt; break;
        }
        return core::mkBin(op, elabExp(ctx, *b.operands[0]), elabExp(ctx, *b.operands[1]), b.loc);
      }
      case BExp::Kind::Orred: {
        core::ExprPtr v = elabExp(ctx, *b.operands[0]);
        if (v->width == 1) return v;
        return core::mkUn(core::UnOp::OrReduce, v, b.loc);
      }
    }
    throw CompileError(b.loc, "internal: unhandled boolean expression");
  }

  // ---- method application ---------------------------------------------------

  std::optional<core::ExprPtr> elabApply(RuleCtx& ctx, const Exp& e, bool statement) {
    const auto& path = e.applyPath;
    if (!path.empty() && path[0][0] == '$') {
      if (path.size() != 1)
        throw CompileError(e.loc, "system task name cannot be dotted");
      emitPli(ctx, path[0], e.args, e.loc);
      return std::nullopt;
    }
    if (path.size() == 1 && path[0] == "sizeof") {
      auto v = staticSizeof(e);
      if (!v) throw CompileError(e.loc, "sizeof needs a type argument like sizeof(UInt(15))");
      return core::mkConst(*v, 32, e.loc);
    }

    const Value* cur = ctx.env->find(path[0]);
    if (!cur) throw CompileError(e.loc, "unknown identifier '" + path[0] + "'");
    size_t i = 0;
    while (true) {
      switch (cur->kind) {
        case Value::Kind::Module: {
          if (i + 1 >= path.size())
            throw CompileError(e.loc, "instance '" + joinPath(path, i) + "' needs a method name");
          auto it = cur->view->names.find(path[i + 1]);
          if (it == cur->view->names.end())
            throw CompileError(e.loc, "'" + joinPath(path, i) + "' has no member '" +
                                          path[i + 1] + "'");
          cur = &it->second;
          ++i;
          break;
        }
        case Value::Kind::Prim: {
          if (i + 2 != path.size())
            throw CompileError(e.loc, "expected '" + joinPath(path, i) + ".<method>(...)'");
          return primCall(ctx, cur->prim, path[i + 1], e, statement);
        }
        case Value::Kind::Method: {
          if (i + 1 != path.size())
            throw CompileError(e.loc, "'" + joinPath(path, i) + "' is a method, not an instance");
          return inlineCall(ctx, *cur->method, e, statement);
        }
        case Value::Kind::Static:
        case Value::Kind::Runtime:
          throw CompileError(e.loc, "'" + path[i] + "' is not an instance or method");
      }
    }
  }

  std::optional<core::ExprPtr> primCall(RuleCtx& ctx, const std::string& instPath,
                                        const std::string& method, const Exp& e, bool statement) {
    const core::Instance* inst = design_.instance(instPath);
    if (!inst) throw CompileError(e.loc, "internal: missing instance '" + instPath + "'");
    const core::MethodSpec* spec = inst->method(method);
    if (!spec)
      throw CompileError(e.loc, "'" + instPath + "' has no method '" + method + "'");
    if (e.args.size() != spec->argWidths.size())
      throw CompileError(e.loc, instPath + "." + method + " takes " +
                                    std::to_string(spec->argWidths.size()) + " argument(s), got " +
                                    std::to_string(e.args.size()));
    std::vector<core::ExprPtr> args;
    for (const auto& a : e.args) args.push_back(elabExp(ctx, *a));

    switch (spec->protocol) {
      case core::Protocol::Value:
        if (statement)
          throw CompileError(e.loc,
                             "call to value method '" + instPath + "." + method + "' has no effect");
        return core::mkRead(instPath, method, std::move(args), spec->resultWidth, e.loc);
      case core::Protocol::Action:
      case core::Protocol::ActionValue: {
        if (!ctx.allowActions || !ctx.rule)
          throw CompileError(e.loc, "action method '" + instPath + "." + method +
                                        "' cannot be called in a guard or static context");
        core::Action act;
        act.kind = core::Action::Kind::Call;
        act.when = ctx.when;
        act.whenParts = ctx.whenParts;
        act.path = instPath;
        act.method = method;
        act.args = std::move(args);
        act.loc = e.loc;
        if (spec->protocol == core::Protocol::ActionValue) {
          int id = static_cast<int>(ctx.rule->bindings.size());
          ctx.rule->bindings.push_back({id, spec->resultWidth, instPath, method});
          act.resultBinding = id;
          ctx.rule->actions.push_back(std::move(act));
          return core::mkBinding(id, spec->resultWidth, e.loc);
        }
        if (!statement)
          throw CompileError(e.loc, "action method '" + instPath + "." + method +
                                        "' produces no value");
        ctx.rule->actions.push_back(std::move(act));
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  static bool bodyHasReturn(const std::vector<StmtPtr>& body) {
    for (const auto& s : body) {
      switch (s->kind) {
        case Stmt::Kind::Return:
          return true;
        case Stmt::Kind::BeginEnd:
          if (bodyHasReturn(s->body)) return true;
          break;
        case Stmt::Kind::If:
          if (s->thenS && bodyHasReturn({s->thenS})) return true;
          if (s->elseS && bodyHasReturn({s->elseS})) return true;
          break;
        case Stmt::Kind::While:
          if (s->thenS && bodyHasReturn({s->thenS})) return true;
          break;
        case Stmt::Kind::Case:
          for (const auto& [l, arm] : s->caseArms)
            if (bodyHasReturn({arm})) return true;
          if (s->caseDefault && bodyHasReturn({s->caseDefault})) return true;
          break;
        default:
          break;
      }
    }
    return false;
  }

  std::optional<core::ExprPtr> inlineCall(RuleCtx& ctx, const MethodInfo& mi, const Exp& e,
                                          bool statement) {
    for (const auto& n : inlineStack_)
      if (n == mi.qualName) {
        std::string chain;
        for (const auto& m : inlineStack_) chain += m + " -> ";
        throw CompileError(e.loc, "recursive method call: " + chain + mi.qualName);
      }

    const Stmt& def = *mi.def;
    if (e.args.size() != def.formals.size())
      throw CompileError(e.loc, "method '" + mi.qualName + "' takes " +
                                    std::to_string(def.formals.size()) + " argument(s), got " +
                                    std::to_string(e.args.size()));

    enum class Proto { Value, Action, ActionValue };
    Proto proto;
    if (def.declType.name == "Action")
      proto = Proto::Action;
    else if (def.declType.name == "ActionValue")
      proto = Proto::ActionValue;
    else if (!def.declType.empty())
      proto = Proto::Value;
    else
      proto = bodyHasReturn(def.body) ? Proto::Value : Proto::Action;

    if (proto != Proto::Value && (!ctx.allowActions || !ctx.rule))
      throw CompileError(e.loc, "method '" + mi.qualName +
                                    "' performs actions and cannot be called in a guard");
    if (proto == Proto::Value && statement)
      throw CompileError(e.loc, "call to value method '" + mi.qualName + "' has no effect");

    // Bind formals to the caller-side actuals; static values stay static so
    // they can steer elaboration-time control flow inside the method.
    Env menv;
    menv.view = mi.owner.get();
    for (size_t i = 0; i < e.args.size(); ++i) {
      Value v;
      staticFail_.clear();
      if (auto sv = staticExp(*ctx.env, *e.args[i])) {
        v.kind = Value::Kind::Static;
        v.num = *sv;
      } else if (e.args[i]->kind == Exp::Kind::IfcRef) {
        const Value* h = ctx.env->find(e.args[i]->name);
        if (!h) throw CompileError(e.args[i]->loc, "unknown identifier '" + e.args[i]->name + "'");
        v = *h;
      } else {
        v.kind = Value::Kind::Runtime;
        v.expr = elabExp(ctx, *e.args[i]);
      }
      menv.locals[def.formals[i].second] = v;
    }

    inlineStack_.push_back(mi.qualName);

    RuleCtx mctx;
    mctx.rule = ctx.rule;
    mctx.env = &menv;
    mctx.when = ctx.when;
    mctx.whenParts = ctx.whenParts;
    mctx.allowActions = ctx.allowActions && proto != Proto::Value;

    if (def.guard) {
      RuleCtx gctx = mctx;
      gctx.allowActions = false;
      core::ExprPtr g = elabBexp(gctx, *def.guard);
      if (!ctx.rule)
        throw CompileError(e.loc, "guarded method '" + mi.qualName + "' cannot be used here");
      ctx.rule->inheritedGuards.push_back({g, mi.qualName, ctx.whenParts});
    }

    core::ExprPtr ret;
    if (proto != Proto::Action) mctx.returnSlot = &ret;
    for (const auto& s : def.body) elabStmt(mctx, *s);
    inlineStack_.pop_back();

    if (proto == Proto::Action) return std::nullopt;
    if (!ret)
      throw CompileError(def.loc, "method '" + mi.qualName + "' must return a value");
    return ret;
  }

  // ---- FSM desugaring ----------------------------------------------------------

  int countStates(const FsmStmt& f) {
    switch (f.kind) {
      case FsmStmt::Kind::Seq: {
        int n = 0;
        for (const auto& c : f.body) n += countStates(*c);
        return n;
      }
      case FsmStmt::Kind::Par:
        return 2;  // fork and join states; arms are separate machines
      case FsmStmt::Kind::If:
        return 1 + countStates(*f.thenS) + (f.elseS ? countStates(*f.elseS) : 0);
      case FsmStmt::Kind::While:
        return 1 + countStates(*f.thenS);
      case FsmStmt::Kind::Repeat:
        return countStates(*f.thenS);
      case FsmStmt::Kind::Action:
      case FsmStmt::Kind::Break:
      case FsmStmt::Kind::Continue:
        return 1;
    }
    return 0;
  }

  void elabFsm(ModCtx& mc, const FsmStmtPtr& root, SourceLoc loc) {
    std::string name = mc.prefix + "fsm" + std::to_string(mc.fsmCount++);
    buildMachine(mc, *root, name, /*startIdle=*/false, loc);
  }

  Machine buildMachine(ModCtx& mc, const FsmStmt& root, const std::string& name, bool startIdle,
                       SourceLoc loc) {
    Machine m;
    m.name = name;
    m.total = countStates(root);
    if (m.total == 0) throw CompileError(loc, "FSM has no steps");
    m.width = bitsFor(static_cast<uint64_t>(m.total));
    addInstance(prim::makeRegister(name, m.width, startIdle ? m.total : 0, loc));
    emitFsm(mc, root, 0, m.total, nullptr, m);
    return m;
  }

  core::ExprPtr stateConst(const Machine& m, int k, SourceLoc loc) {
    return core::mkConst(static_cast<uint64_t>(k), m.width, loc);
  }

  core::ExprPtr stateRead(const Machine& m, SourceLoc loc) {
    return core::mkRead(m.name, "_read", {}, m.width, loc);
  }

  // Guard for "state == k", written as a conjunction of threshold literals
  // (state >= t) so any two states of one machine share a complementary
  // unit clause and the exclusivity analysis sees them as disjoint.
  core::ExprPtr stateGuard(const Machine& m, int k, SourceLoc loc) {
    core::ExprPtr g;
    for (int t = 1; t <= m.total; ++t) {
      core::ExprPtr lit =
          core::mkBin(core::BinOp::Ge, stateRead(m, loc), stateConst(m, t, loc), loc);
      if (t > k) lit = core::mkUn(core::UnOp::Not, lit, loc);
      g = core::andAlso(g, lit);
    }
    return g ? g : core::mkBool(true, loc);
  }

  // Emits one state's rule. succBuilder produces the next-state expression;
  // it runs inside the rule's context so method calls in it land here.
  template <typename SuccF>
  void stateRule(ModCtx& mc, const Machine& m, int k, const ExpPtr& action,
                 const std::vector<core::ExprPtr>& extraGuard, SuccF succBuilder, SourceLoc loc) {
    core::Rule rule;
    rule.name = m.name + "_s" + std::to_string(k);
    rule.loc = loc;
    rule.guard = stateGuard(m, k, loc);
    for (const auto& g : extraGuard) rule.guard = core::andAlso(rule.guard, g);

    Env ruleEnv;
    ruleEnv.view = mc.env.view;
    RuleCtx ctx;
    ctx.rule = &rule;
    ctx.env = &ruleEnv;
    ctx.allowActions = true;

    if (action) {
      if (action->kind != Exp::Kind::Apply)
        throw CompileError(action->loc, "FSM step must be a register write or a method call");
      elabApply(ctx, *action, /*statement=*/true);
    }
    core::ExprPtr succ = succBuilder(ctx);
    core::Action wr;
    wr.kind = core::Action::Kind::Call;
    wr.path = m.name;
    wr.method = "_write";
    wr.args.push_back(succ);
    wr.loc = loc;
    rule.actions.push_back(std::move(wr));
    addRule(std::move(rule));
  }

  void emitFsm(ModCtx& mc, const FsmStmt& f, int entry, int exit, const LoopCtx* loop,
               const Machine& m) {
    switch (f.kind) {
      case FsmStmt::Kind::Seq: {
        int cur = entry;
        for (size_t i = 0; i < f.body.size(); ++i) {
          int c = countStates(*f.body[i]);
          int next = (i + 1 == f.body.size()) ? exit : cur + c;
          emitFsm(mc, *f.body[i], cur, next, loop, m);
          cur += c;
        }
        return;
      }
      case FsmStmt::Kind::Action:
        stateRule(mc, m, entry, f.action, {},
                  [&](RuleCtx&) { return stateConst(m, exit, f.loc); }, f.loc);
        return;
      case FsmStmt::Kind::If: {
        int tc = countStates(*f.thenS);
        int ec = f.elseS ? countStates(*f.elseS) : 0;
        int thenEntry = tc > 0 ? entry + 1 : exit;
        int elseEntry = ec > 0 ? entry + 1 + tc : exit;
        stateRule(mc, m, entry, nullptr, {},
                  [&](RuleCtx& ctx) {
                    return core::mkMux(elabBexp(ctx, *f.cond), stateConst(m, thenEntry, f.loc),
                                       stateConst(m, elseEntry, f.loc), f.loc);
                  },
                  f.loc);
        if (tc > 0) emitFsm(mc, *f.thenS, entry + 1, exit, loop, m);
        if (ec > 0) emitFsm(mc, *f.elseS, entry + 1 + tc, exit, loop, m);
        return;
      }
      case FsmStmt::Kind::While: {
        int bc = countStates(*f.thenS);
        int bodyEntry = bc > 0 ? entry + 1 : entry;
        stateRule(mc, m, entry, nullptr, {},
                  [&](RuleCtx& ctx) {
                    return core::mkMux(elabBexp(ctx, *f.cond), stateConst(m, bodyEntry, f.loc),
                                       stateConst(m, exit, f.loc), f.loc);
                  },
                  f.loc);
        if (bc > 0) {
          LoopCtx lc{entry, exit};
          emitFsm(mc, *f.thenS, entry + 1, entry, &lc, m);
        }
        return;
      }
      case FsmStmt::Kind::Repeat: {
        int bc = countStates(*f.thenS);
        if (bc == 0) throw CompileError(f.loc, "repeat body has no steps");
        LoopCtx lc{entry, exit};
        emitFsm(mc, *f.thenS, entry, entry, &lc, m);
        return;
      }
      case FsmStmt::Kind::Break:
        if (!loop) throw CompileError(f.loc, "break outside a loop");
        stateRule(mc, m, entry, nullptr, {},
                  [&](RuleCtx&) { return stateConst(m, loop->breakTarget, f.loc); }, f.loc);
        return;
      case FsmStmt::Kind::Continue:
        if (!loop) throw CompileError(f.loc, "continue outside a loop");
        stateRule(mc, m, entry, nullptr, {},
                  [&](RuleCtx&) { return stateConst(m, loop->continueTarget, f.loc); }, f.loc);
        return;
      case FsmStmt::Kind::Par: {
        std::vector<Machine> arms;
        for (size_t i = 0; i < f.body.size(); ++i) {
          if (countStates(*f.body[i]) == 0)
            throw CompileError(f.body[i]->loc, "parallel arm has no steps");
          arms.push_back(buildMachine(mc, *f.body[i], m.name + "_a" + std::to_string(i),
                                      /*startIdle=*/true, f.body[i]->loc));
        }
        // Fork: launch every arm, then wait in the next state for them all.
        stateRule(mc, m, entry, nullptr, {},
                  [&](RuleCtx& ctx) {
                    for (const auto& arm : arms) {
                      core::Action wr;
                      wr.kind = core::Action::Kind::Call;
                      wr.path = arm.name;
                      wr.method = "_write";
                      wr.args.push_back(stateConst(arm, 0, f.loc));
                      wr.loc = f.loc;
                      ctx.rule->actions.push_back(std::move(wr));
                    }
                    return stateConst(m, entry + 1, f.loc);
                  },
                  f.loc);
        std::vector<core::ExprPtr> armsDone;
        for (const auto& arm : arms)
          armsDone.push_back(core::mkBin(core::BinOp::Ge, stateRead(arm, f.loc),
                                         stateConst(arm, arm.total, f.loc), f.loc));
        stateRule(mc, m, entry + 1, nullptr, armsDone,
                  [&](RuleCtx&) { return stateConst(m, exit, f.loc); }, f.loc);
        return;
      }
    }
  }

  // ---- post-elaboration checks ----------------------------------------------

  std::vector<std::pair<std::vector<std::string>, SourceLoc>> annotationRefs_;

  void postChecks() {
    for (const auto& [name, loc] : firingRefs_)
      if (design_.ruleIndex(name) < 0)
        throw CompileError(loc, "firing() references unknown rule '" + name + "'");
    for (const auto& [names, loc] : annotationRefs_)
      for (const auto& n : names)
        if (design_.ruleIndex(n) < 0)
          throw CompileError(loc, "annotation references unknown rule '" + n + "'");
    for (const auto& rule : design_.rules)
      for (const auto& act : rule.actions)
        if (act.kind == core::Action::Kind::Call && !design_.instance(act.path))
          throw CompileError(act.loc, "internal: unresolved call target '" + act.path + "'");
  }
};

}  // namespace

core::Design elaborate(const ast::SurfaceAst& unit, const std::string& topName,
                       core::GuardMode mode) {
  Elaborator e(unit);
  return e.run(topName, mode);
}

}  // namespace bluec
