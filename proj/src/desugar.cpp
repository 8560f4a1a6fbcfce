#include "bluec/desugar.hpp"

#include <set>

namespace bluec {

using namespace ast;

namespace {

// Rewrites one module. Register names are collected from Reg#() declarations
// up front; local bindings and formals shadow them while in scope.
class Desugarer {
 public:
  explicit Desugarer(const ModuleDef& mod) {
    // Declarations may sit under module-level static control flow.
    for (const auto& s : mod.body) collectRegs(s);
    for (const auto& [ty, name] : mod.params) shadowed_.insert(name);
  }

  StmtPtr stmt(const StmtPtr& sIn) {
    auto s = std::make_shared<Stmt>(*sIn);
    switch (s->kind) {
      case Stmt::Kind::VarDeclAssign:
        for (auto& a : s->ctorArgs) a = exp(a);
        return s;
      case Stmt::Kind::Rule: {
        auto saved = shadowed_;
        s->guard = bexp(s->guard);
        for (auto& b : s->body) b = stmt(b);
        shadowed_ = saved;
        return s;
      }
      case Stmt::Kind::Assign:
        s->value = exp(s->value);
        shadowed_.insert(s->name);
        return s;
      case Stmt::Kind::RegWrite: {
        // x <= e  ->  x._write(e). Non-register targets are rewritten too;
        // elaboration reports them when the name does not resolve to a
        // register.
        auto call = std::make_shared<Exp>();
        call->kind = Exp::Kind::Apply;
        call->applyPath = {s->name, "_write"};
        call->args.push_back(exp(s->value));
        call->loc = s->loc;
        auto repl = std::make_shared<Stmt>();
        repl->kind = Stmt::Kind::ActionCall;
        repl->value = call;
        repl->loc = s->loc;
        return repl;
      }
      case Stmt::Kind::ActionCall:
        s->value = exp(s->value);
        return s;
      case Stmt::Kind::Pli:
        for (auto& a : s->args) a = exp(a);
        return s;
      case Stmt::Kind::BeginEnd: {
        auto saved = shadowed_;
        for (auto& b : s->body) b = stmt(b);
        shadowed_ = saved;
        return s;
      }
      case Stmt::Kind::If:
        s->cond = bexp(s->cond);
        s->thenS = stmt(s->thenS);
        if (s->elseS) s->elseS = stmt(s->elseS);
        return s;
      case Stmt::Kind::While:
        s->cond = bexp(s->cond);
        s->thenS = stmt(s->thenS);
        return s;
      case Stmt::Kind::Return:
        s->value = exp(s->value);
        return s;
      case Stmt::Kind::Case:
        s->subject = exp(s->subject);
        for (auto& [label, arm] : s->caseArms) {
          label = exp(label);
          arm = stmt(arm);
        }
        if (s->caseDefault) s->caseDefault = stmt(s->caseDefault);
        return s;
      case Stmt::Kind::MethodDef: {
        auto saved = shadowed_;
        for (const auto& [ty, name] : s->formals) shadowed_.insert(name);
        if (s->guard) s->guard = bexp(s->guard);
        for (auto& b : s->body) b = stmt(b);
        shadowed_ = saved;
        return s;
      }
      case Stmt::Kind::PrimBuffer:
        for (auto& a : s->args) a = exp(a);
        return s;
    }
    return s;
  }

 private:
  std::set<std::string> regs_;
  std::set<std::string> shadowed_;

  void collectRegs(const StmtPtr& s) {
    if (!s) return;
    switch (s->kind) {
      case Stmt::Kind::VarDeclAssign:
        if (s->declType.name == "Reg") regs_.insert(s->name);
        return;
      case Stmt::Kind::If:
        collectRegs(s->thenS);
        collectRegs(s->elseS);
        return;
      case Stmt::Kind::While:
        collectRegs(s->thenS);
        return;
      case Stmt::Kind::BeginEnd:
        for (const auto& b : s->body) collectRegs(b);
        return;
      default:
        return;
    }
  }

  bool isReg(const std::string& name) const {
    return regs_.count(name) && !shadowed_.count(name);
  }

  ExpPtr exp(const ExpPtr& eIn) {
    auto e = std::make_shared<Exp>(*eIn);
    switch (e->kind) {
      case Exp::Kind::Var:
        if (isReg(e->name)) {
          auto call = std::make_shared<Exp>();
          call->kind = Exp::Kind::Apply;
          call->applyPath = {e->name, "_read"};
          call->loc = e->loc;
          return call;
        }
        return e;
      case Exp::Kind::Apply: {
        auto& path = e->applyPath;
        if (path.size() >= 2) {
          std::string& last = path.back();
          if (last == "read") last = "_read";
          else if (last == "write") last = "_write";
        }
        for (auto& a : e->args) a = exp(a);
        return e;
      }
      case Exp::Kind::BoolLift:
        e->cond = bexp(e->cond);
        return e;
      case Exp::Kind::Query:
        e->cond = bexp(e->cond);
        e->a = exp(e->a);
        e->b = exp(e->b);
        return e;
      case Exp::Kind::Diadic:
        e->a = exp(e->a);
        e->b = exp(e->b);
        return e;
      case Exp::Kind::Fsm:
        e->fsm = fsm(e->fsm);
        return e;
      case Exp::Kind::Num:
      case Exp::Kind::Str:
      case Exp::Kind::IfcRef:
        return e;
    }
    return e;
  }

  BExpPtr bexp(const BExpPtr& bIn) {
    auto b = std::make_shared<BExp>(*bIn);
    for (auto& t : b->terms) t = bexp(t);
    for (auto& o : b->operands) o = exp(o);
    return b;
  }

  FsmStmtPtr fsm(const FsmStmtPtr& fIn) {
    auto f = std::make_shared<FsmStmt>(*fIn);
    for (auto& s : f->body) s = fsm(s);
    if (f->cond) f->cond = bexp(f->cond);
    if (f->thenS) f->thenS = fsm(f->thenS);
    if (f->elseS) f->elseS = fsm(f->elseS);
    if (f->action) f->action = exp(f->action);
    return f;
  }
};

}  // namespace

ast::SurfaceAst desugarSugar(const ast::SurfaceAst& unit) {
  SurfaceAst out;
  out.interfaces = unit.interfaces;
  for (const auto& mod : unit.modules) {
    ModuleDef m = mod;
    Desugarer d(mod);
    m.body.clear();
    for (const auto& s : mod.body) m.body.push_back(d.stmt(s));
    out.modules.push_back(std::move(m));
  }
  return out;
}

}  // namespace bluec
