#include "bluec/parser.hpp"

#include <functional>
#include <optional>
#include <set>

#include "bluec/diag.hpp"

namespace bluec {

using namespace ast;

namespace {

// Parser-internal untyped expression tree. Expressions are parsed without
// committing to integer/boolean, then converted on demand; the conversion
// inserts BoolLift (bool used as int) and Orred (int used as bool) nodes.
struct PNode;
using PNodePtr = std::shared_ptr<PNode>;
struct PNode {
  enum class Kind { Num, Str, Var, Apply, Diadic, Cmp, And, Or, Not, Query, True, False, Firing, Fsm };
  Kind kind;
  uint64_t num = 0;
  std::string str;   // Str value / Var name / Firing rule
  DiOp diop = DiOp::Add;
  CmpOp cmp = CmpOp::Lt;
  PNodePtr a, b, c;  // operands; Query uses all three
  std::vector<std::string> applyPath;
  std::vector<PNodePtr> args;
  FsmStmtPtr fsm;
  SourceLoc loc;
};

class Parser {
 public:
  explicit Parser(const std::vector<Token>& toks) : toks_(toks) {}

  void parseInto(SurfaceAst& unit) {
    while (!at(TokenKind::Eof)) {
      std::vector<Attr> attrs = parseAttrBlocks();
      if (atKw("interface")) {
        if (!attrs.empty()) throw err(attrs.front().loc, "attribute block is not applicable here");
        unit.interfaces.push_back(parseInterface());
      } else if (atKw("module")) {
        ModuleDef mod = parseModule();
        mod.attrs = std::move(attrs);
        unit.modules.push_back(std::move(mod));
      } else {
        throw expected("'interface' or 'module'");
      }
    }
  }

 private:
  const std::vector<Token>& toks_;
  size_t pos_ = 0;

  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(size_t n = 1) const {
    size_t p = pos_ + n;
    return p < toks_.size() ? toks_[p] : toks_.back();
  }
  bool at(TokenKind k) const { return cur().kind == k; }
  bool atKw(const char* t) const { return cur().isKw(t); }
  bool atOp(const char* t) const { return cur().isOp(t); }
  bool atPunct(const char* t) const { return cur().isPunct(t); }
  Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  CompileError err(const SourceLoc& loc, const std::string& msg) const { return CompileError(loc, msg); }
  CompileError expected(const std::string& what) const {
    return CompileError(cur().loc, "expected " + what + ", found '" + cur().text + "'");
  }

  Token expectKw(const char* t) {
    if (!atKw(t)) throw expected(std::string("'") + t + "'");
    return take();
  }
  Token expectOp(const char* t) {
    if (!atOp(t)) throw expected(std::string("'") + t + "'");
    return take();
  }
  Token expectPunct(const char* t) {
    if (!atPunct(t)) throw expected(std::string("'") + t + "'");
    return take();
  }
  Token expectIdent(const char* what) {
    if (!at(TokenKind::Ident)) throw expected(what);
    return take();
  }

  // Optional "endfoo : name" tail; the name must match when present.
  void parseEndLabel(const std::string& name) {
    if (atOp(":")) {
      take();
      Token t = expectIdent("name after ':'");
      if (t.text != name)
        throw err(t.loc, "end label '" + t.text + "' does not match '" + name + "'");
    }
  }

  // ---- attributes ------------------------------------------------------

  std::vector<Attr> parseAttrBlocks() {
    std::vector<Attr> attrs;
    while (at(TokenKind::AttrOpen)) {
      take();
      while (true) {
        Token nameTok = expectIdent("attribute name");
        static const std::set<std::string> known = {
            "descending_urgency", "execution_order", "fire_when_enabled",
            "always_ready", "always_enabled"};
        if (!known.count(nameTok.text))
          throw err(nameTok.loc, "unknown attribute '" + nameTok.text + "'");
        Attr attr;
        attr.name = nameTok.text;
        attr.loc = nameTok.loc;
        if (atOp("=")) {
          take();
          if (!at(TokenKind::StringLit)) throw expected("quoted attribute value");
          attr.value = take().strValue;
        }
        attrs.push_back(std::move(attr));
        if (atPunct(",")) {
          take();
          continue;
        }
        break;
      }
      if (!at(TokenKind::AttrClose)) throw expected("'*)'");
      take();
    }
    return attrs;
  }

  // ---- types -----------------------------------------------------------

  bool atTypeStart() const {
    return at(TokenKind::Ident);
  }

  TypeRef parseType() {
    Token head = expectIdent("type name");
    TypeRef t;
    t.name = head.text;
    t.loc = head.loc;
    bool sharp = false;
    if (atOp("#")) {
      take();
      sharp = true;
    }
    if (sharp || (t.name == "UInt" && atPunct("("))) {
      expectPunct("(");
      if (at(TokenKind::IntLit)) {
        t.num = static_cast<int>(take().intValue);
      } else {
        t.elem = std::make_shared<TypeRef>(parseType());
      }
      expectPunct(")");
    }
    return t;
  }

  // ---- expressions -----------------------------------------------------

  PNodePtr mk(PNode::Kind k, SourceLoc loc) {
    auto n = std::make_shared<PNode>();
    n->kind = k;
    n->loc = std::move(loc);
    return n;
  }

  PNodePtr parsePExpr() { return parseQuery(); }

  PNodePtr parseQuery() {
    PNodePtr c = parseOr();
    if (atOp("?")) {
      SourceLoc loc = take().loc;
      PNodePtr t = parsePExpr();
      expectOp(":");
      PNodePtr f = parsePExpr();
      PNodePtr q = mk(PNode::Kind::Query, loc);
      q->a = c;
      q->b = t;
      q->c = f;
      return q;
    }
    return c;
  }

  PNodePtr parseOr() {
    PNodePtr lhs = parseAnd();
    while (atOp("||")) {
      SourceLoc loc = take().loc;
      PNodePtr n = mk(PNode::Kind::Or, loc);
      n->a = lhs;
      n->b = parseAnd();
      lhs = n;
    }
    return lhs;
  }

  PNodePtr parseAnd() {
    PNodePtr lhs = parseCmp();
    while (atOp("&&")) {
      SourceLoc loc = take().loc;
      PNodePtr n = mk(PNode::Kind::And, loc);
      n->a = lhs;
      n->b = parseCmp();
      lhs = n;
    }
    return lhs;
  }

  PNodePtr parseCmp() {
    PNodePtr lhs = parseAdd();
    CmpOp op;
    if (atOp("<")) op = CmpOp::Lt;
    else if (atOp("<=")) op = CmpOp::Le;
    else if (atOp(">")) op = CmpOp::Gt;
    else if (atOp(">=")) op = CmpOp::Ge;
    else if (atOp("==")) op = CmpOp::Eq;
    else if (atOp("!=")) op = CmpOp::Ne;
    else return lhs;
    SourceLoc loc = take().loc;
    PNodePtr n = mk(PNode::Kind::Cmp, loc);
    n->cmp = op;
    n->a = lhs;
    n->b = parseAdd();
    return n;
  }

  PNodePtr parseAdd() {
    PNodePtr lhs = parseMul();
    while (atOp("+") || atOp("-")) {
      DiOp op = atOp("+") ? DiOp::Add : DiOp::Sub;
      SourceLoc loc = take().loc;
      PNodePtr n = mk(PNode::Kind::Diadic, loc);
      n->diop = op;
      n->a = lhs;
      n->b = parseMul();
      lhs = n;
    }
    return lhs;
  }

  PNodePtr parseMul() {
    PNodePtr lhs = parseUnary();
    while (atOp("*")) {
      SourceLoc loc = take().loc;
      PNodePtr n = mk(PNode::Kind::Diadic, loc);
      n->diop = DiOp::Mul;
      n->a = lhs;
      n->b = parseUnary();
      lhs = n;
    }
    return lhs;
  }

  PNodePtr parseUnary() {
    if (atOp("!")) {
      SourceLoc loc = take().loc;
      PNodePtr n = mk(PNode::Kind::Not, loc);
      n->a = parseUnary();
      return n;
    }
    return parsePrimary();
  }

  PNodePtr parsePrimary() {
    if (at(TokenKind::IntLit)) {
      Token t = take();
      PNodePtr n = mk(PNode::Kind::Num, t.loc);
      n->num = t.intValue;
      return n;
    }
    if (at(TokenKind::StringLit)) {
      Token t = take();
      PNodePtr n = mk(PNode::Kind::Str, t.loc);
      n->str = t.strValue;
      return n;
    }
    if (atKw("True")) return mk(PNode::Kind::True, take().loc);
    if (atKw("False")) return mk(PNode::Kind::False, take().loc);
    if (atPunct("(")) {
      take();
      PNodePtr inner = parsePExpr();
      expectPunct(")");
      return inner;
    }
    if (at(TokenKind::Ident)) {
      Token head = take();
      // firing(rule) gives a rule's grant; it takes a bare rule name.
      if (head.text == "firing" && atPunct("(")) {
        take();
        Token rn = expectIdent("rule name");
        expectPunct(")");
        PNodePtr n = mk(PNode::Kind::Firing, head.loc);
        n->str = rn.text;
        return n;
      }
      std::vector<std::string> path{head.text};
      while (atOp(".")) {
        take();
        path.push_back(expectIdent("method name after '.'").text);
      }
      if (atPunct("(")) {
        take();
        std::vector<PNodePtr> args;
        if (!atPunct(")")) {
          while (true) {
            args.push_back(parsePExpr());
            if (atPunct(",")) {
              take();
              continue;
            }
            break;
          }
        }
        expectPunct(")");
        PNodePtr n = mk(PNode::Kind::Apply, head.loc);
        n->applyPath = std::move(path);
        n->args = std::move(args);
        return n;
      }
      if (path.size() > 1) {
        // Dotted reference without parens is a no-argument method call.
        PNodePtr n = mk(PNode::Kind::Apply, head.loc);
        n->applyPath = std::move(path);
        return n;
      }
      PNodePtr n = mk(PNode::Kind::Var, head.loc);
      n->str = head.text;
      return n;
    }
    throw expected("expression");
  }

  // ---- untyped -> Exp/BExp conversion -----------------------------------

  ExpPtr toExp(const PNodePtr& n) {
    auto e = std::make_shared<Exp>();
    e->loc = n->loc;
    switch (n->kind) {
      case PNode::Kind::Num:
        e->kind = Exp::Kind::Num;
        e->num = n->num;
        return e;
      case PNode::Kind::Str:
        e->kind = Exp::Kind::Str;
        e->str = n->str;
        return e;
      case PNode::Kind::Var:
        e->kind = Exp::Kind::Var;
        e->name = n->str;
        return e;
      case PNode::Kind::Apply:
        e->kind = Exp::Kind::Apply;
        e->applyPath = n->applyPath;
        for (auto& a : n->args) e->args.push_back(toExp(a));
        return e;
      case PNode::Kind::Diadic:
        e->kind = Exp::Kind::Diadic;
        e->diop = n->diop;
        e->a = toExp(n->a);
        e->b = toExp(n->b);
        return e;
      case PNode::Kind::Query:
        e->kind = Exp::Kind::Query;
        e->cond = toBExp(n->a);
        e->a = toExp(n->b);
        e->b = toExp(n->c);
        return e;
      case PNode::Kind::Fsm:
        e->kind = Exp::Kind::Fsm;
        e->fsm = n->fsm;
        return e;
      // Boolean forms in integer position lift to 0/1.
      case PNode::Kind::Cmp:
      case PNode::Kind::And:
      case PNode::Kind::Or:
      case PNode::Kind::Not:
      case PNode::Kind::True:
      case PNode::Kind::False:
      case PNode::Kind::Firing:
        e->kind = Exp::Kind::BoolLift;
        e->cond = toBExp(n);
        return e;
    }
    throw err(n->loc, "internal: unhandled expression form");
  }

  BExpPtr toBExp(const PNodePtr& n) {
    auto b = std::make_shared<BExp>();
    b->loc = n->loc;
    switch (n->kind) {
      case PNode::Kind::True:
        b->kind = BExp::Kind::True;
        return b;
      case PNode::Kind::False:
        b->kind = BExp::Kind::False;
        return b;
      case PNode::Kind::Firing:
        b->kind = BExp::Kind::Firing;
        b->name = n->str;
        return b;
      case PNode::Kind::Not:
        b->kind = BExp::Kind::Not;
        b->terms.push_back(toBExp(n->a));
        return b;
      case PNode::Kind::And:
      case PNode::Kind::Or: {
        b->kind = n->kind == PNode::Kind::And ? BExp::Kind::And : BExp::Kind::Or;
        // Flatten chains of the same operator into one n-ary node.
        std::function<void(const PNodePtr&)> flat = [&](const PNodePtr& m) {
          if (m->kind == n->kind) {
            flat(m->a);
            flat(m->b);
          } else {
            b->terms.push_back(toBExp(m));
          }
        };
        flat(n->a);
        flat(n->b);
        return b;
      }
      case PNode::Kind::Cmp:
        b->kind = BExp::Kind::Cmp;
        b->cmp = n->cmp;
        b->operands.push_back(toExp(n->a));
        b->operands.push_back(toExp(n->b));
        return b;
      // Integer forms in boolean position or-reduce (nonzero test).
      case PNode::Kind::Num:
      case PNode::Kind::Var:
      case PNode::Kind::Apply:
      case PNode::Kind::Diadic:
      case PNode::Kind::Query:
        b->kind = BExp::Kind::Orred;
        b->operands.push_back(toExp(n));
        return b;
      case PNode::Kind::Str:
        throw err(n->loc, "string literal cannot be used as a condition");
      case PNode::Kind::Fsm:
        throw err(n->loc, "FSM statement cannot be used as a condition");
    }
    throw err(n->loc, "internal: unhandled boolean form");
  }

  ExpPtr parseExpr() { return toExp(parsePExpr()); }
  BExpPtr parseBExpr() { return toBExp(parsePExpr()); }

  // ---- interfaces --------------------------------------------------------

  InterfaceDecl parseInterface() {
    InterfaceDecl ifc;
    ifc.loc = expectKw("interface").loc;
    ifc.name = expectIdent("interface name").text;
    if (atOp("#")) {
      take();
      expectPunct("(");
      while (true) {
        // Accept "type t" / "numeric type n" / bare names.
        while (at(TokenKind::Ident) && (cur().text == "type" || cur().text == "numeric") &&
               peek().kind == TokenKind::Ident)
          take();
        ifc.genericParams.push_back(expectIdent("generic parameter name").text);
        if (atPunct(",")) {
          take();
          continue;
        }
        break;
      }
      expectPunct(")");
    }
    expectPunct(";");
    while (!atKw("endinterface")) {
      std::vector<Attr> attrs = parseAttrBlocks();
      MethodProto proto = parseMethodProto();
      for (const Attr& a : attrs) {
        if (a.name == "always_ready") proto.provisos.push_back(Proviso::AlwaysReady);
        else if (a.name == "always_enabled") proto.provisos.push_back(Proviso::AlwaysEnabled);
        else throw err(a.loc, "attribute '" + a.name + "' is not applicable to a method prototype");
      }
      ifc.methods.push_back(std::move(proto));
    }
    expectKw("endinterface");
    parseEndLabel(ifc.name);
    return ifc;
  }

  MethodProto parseMethodProto() {
    MethodProto proto;
    proto.loc = expectKw("method").loc;
    TypeRef rt = parseType();
    if (rt.name == "Action") {
      proto.protocol = Protocol::Action;
    } else if (rt.name == "ActionValue") {
      proto.protocol = Protocol::ActionValue;
      if (!rt.elem && rt.num < 0) throw err(rt.loc, "ActionValue needs a result type");
      proto.retType = rt.elem ? *rt.elem : TypeRef{"UInt", nullptr, rt.num, rt.loc};
    } else {
      proto.protocol = Protocol::Value;
      proto.retType = rt;
    }
    proto.name = expectIdent("method name").text;
    expectPunct("(");
    if (!atPunct(")")) {
      while (true) {
        TypeRef ft = parseType();
        std::string fn = expectIdent("formal name").text;
        proto.formals.emplace_back(ft, fn);
        if (atPunct(",")) {
          take();
          continue;
        }
        break;
      }
    }
    expectPunct(")");
    expectPunct(";");
    return proto;
  }

  // ---- modules -----------------------------------------------------------

  ModuleDef parseModule() {
    ModuleDef mod;
    mod.loc = expectKw("module").loc;
    mod.name = expectIdent("module name").text;
    if (atOp("#")) {
      take();
      expectPunct("(");
      while (true) {
        TypeRef pt = parseType();
        std::string pn = expectIdent("parameter name").text;
        mod.params.emplace_back(pt, pn);
        if (atPunct(",")) {
          take();
          continue;
        }
        break;
      }
      expectPunct(")");
    }
    expectPunct("(");
    if (atPunct(")")) {
      mod.ifcName = "Empty";  // "module test1 ()" implements the empty interface
    } else {
      mod.ifcName = expectIdent("interface name").text;
    }
    expectPunct(")");
    expectPunct(";");
    while (!atKw("endmodule")) mod.body.push_back(parseStmt());
    expectKw("endmodule");
    parseEndLabel(mod.name);
    return mod;
  }

  // ---- statements ---------------------------------------------------------

  StmtPtr newStmt(Stmt::Kind k, SourceLoc loc) {
    auto s = std::make_shared<Stmt>();
    s->kind = k;
    s->loc = std::move(loc);
    return s;
  }

  StmtPtr parseStmt() {
    std::vector<Attr> attrs = parseAttrBlocks();
    if (atKw("rule")) {
      StmtPtr r = parseRule();
      r->attrs = std::move(attrs);
      return r;
    }
    if (!attrs.empty()) throw err(attrs.front().loc, "attribute block must precede a rule");

    if (atKw("seq") || atKw("par")) {
      SourceLoc loc = cur().loc;
      FsmStmtPtr fsm = parseFsmStmt();
      auto e = std::make_shared<Exp>();
      e->kind = Exp::Kind::Fsm;
      e->fsm = fsm;
      e->loc = loc;
      StmtPtr s = newStmt(Stmt::Kind::ActionCall, loc);
      s->value = e;
      return s;
    }
    if (atKw("method")) return parseMethodDef();
    if (atKw("let")) {
      SourceLoc loc = take().loc;
      std::string name = expectIdent("binding name").text;
      expectOp("=");
      StmtPtr s = newStmt(Stmt::Kind::Assign, loc);
      s->name = name;
      s->value = parseExpr();
      expectPunct(";");
      return s;
    }
    if (atKw("begin") || atKw("action")) {
      bool isAction = atKw("action");
      SourceLoc loc = take().loc;
      StmtPtr s = newStmt(Stmt::Kind::BeginEnd, loc);
      const char* endKw = isAction ? "endaction" : "end";
      while (!atKw(endKw)) s->body.push_back(parseStmt());
      take();
      return s;
    }
    if (atKw("if")) {
      SourceLoc loc = take().loc;
      expectPunct("(");
      BExpPtr cond = parseBExpr();
      expectPunct(")");
      StmtPtr s = newStmt(Stmt::Kind::If, loc);
      s->cond = cond;
      s->thenS = parseStmt();
      if (atKw("else")) {
        take();
        s->elseS = parseStmt();
      }
      return s;
    }
    if (atKw("while")) {
      SourceLoc loc = take().loc;
      expectPunct("(");
      BExpPtr cond = parseBExpr();
      expectPunct(")");
      StmtPtr s = newStmt(Stmt::Kind::While, loc);
      s->cond = cond;
      s->thenS = parseStmt();
      return s;
    }
    if (atKw("return")) {
      SourceLoc loc = take().loc;
      StmtPtr s = newStmt(Stmt::Kind::Return, loc);
      s->value = parseExpr();
      expectPunct(";");
      return s;
    }
    if (atKw("case")) return parseCase();
    if (at(TokenKind::Ident) && cur().text[0] == '$') {
      Token t = take();
      StmtPtr s = newStmt(Stmt::Kind::Pli, t.loc);
      s->pli = t.text;
      expectPunct("(");
      if (!atPunct(")")) {
        while (true) {
          s->args.push_back(parseExpr());
          if (atPunct(",")) {
            take();
            continue;
          }
          break;
        }
      }
      expectPunct(")");
      expectPunct(";");
      return s;
    }
    if (at(TokenKind::Ident) && cur().text == "primBuffer" && peek().isPunct("(")) {
      SourceLoc loc = take().loc;
      expectPunct("(");
      StmtPtr s = newStmt(Stmt::Kind::PrimBuffer, loc);
      s->args.push_back(parseExpr());
      expectPunct(",");
      s->args.push_back(parseExpr());
      expectPunct(")");
      expectPunct(";");
      return s;
    }
    if (at(TokenKind::Ident)) return parseIdentStmt();
    if (at(TokenKind::Keyword))
      throw err(cur().loc, "statement '" + cur().text + "' is not in subset");
    throw expected("statement");
  }

  // Statements opening with an identifier: declarations, assignments,
  // register writes, and action calls. Disambiguated by lookahead.
  StmtPtr parseIdentStmt() {
    SourceLoc loc = cur().loc;
    bool typed = peek().is(TokenKind::Ident) || peek().isOp("#") ||
                 (cur().text == "UInt" && peek().isPunct("("));
    if (typed) {
      TypeRef ty = parseType();
      std::string name = expectIdent("name after type").text;
      if (atOp("<-")) {
        take();
        StmtPtr s = newStmt(Stmt::Kind::VarDeclAssign, loc);
        s->declType = ty;
        s->name = name;
        s->ctor = expectIdent("constructor name").text;
        if (atPunct("(")) {
          take();
          if (!atPunct(")")) {
            while (true) {
              s->ctorArgs.push_back(parseCtorArg());
              if (atPunct(",")) {
                take();
                continue;
              }
              break;
            }
          }
          expectPunct(")");
        }
        expectPunct(";");
        return s;
      }
      if (atOp("=")) {
        take();
        StmtPtr s = newStmt(Stmt::Kind::Assign, loc);
        s->declType = ty;
        s->name = name;
        s->value = parseExpr();
        expectPunct(";");
        return s;
      }
      throw expected("'<-' or '=' after declaration");
    }
    if (peek().isOp("<=")) {
      std::string name = take().text;
      take();  // <=
      StmtPtr s = newStmt(Stmt::Kind::RegWrite, loc);
      s->name = name;
      s->value = parseExpr();
      expectPunct(";");
      return s;
    }
    if (peek().isOp("=")) {
      std::string name = take().text;
      take();  // =
      StmtPtr s = newStmt(Stmt::Kind::Assign, loc);
      s->name = name;
      s->value = parseExpr();
      expectPunct(";");
      return s;
    }
    // Anything else must be a call used as an action.
    ExpPtr e = parseExpr();
    if (e->kind != Exp::Kind::Apply)
      throw err(loc, "expression statement must be a method or task call");
    StmtPtr s = newStmt(Stmt::Kind::ActionCall, loc);
    s->value = e;
    expectPunct(";");
    return s;
  }

  // Constructor arguments: a bare identifier names an interface being wired
  // through; anything else is an ordinary (static) expression.
  ExpPtr parseCtorArg() {
    if (at(TokenKind::Ident) && (peek().isPunct(",") || peek().isPunct(")"))) {
      Token t = take();
      auto e = std::make_shared<Exp>();
      e->kind = Exp::Kind::IfcRef;
      e->name = t.text;
      e->loc = t.loc;
      return e;
    }
    return parseExpr();
  }

  StmtPtr parseRule() {
    SourceLoc loc = expectKw("rule").loc;
    StmtPtr s = newStmt(Stmt::Kind::Rule, loc);
    s->name = expectIdent("rule name").text;
    if (atPunct("(")) {
      take();
      s->guard = parseBExpr();
      expectPunct(")");
    } else {
      // A guardless rule gets the trivially true guard.
      auto g = std::make_shared<BExp>();
      g->kind = BExp::Kind::True;
      g->loc = loc;
      s->guard = g;
    }
    expectPunct(";");
    while (!atKw("endrule")) s->body.push_back(parseStmt());
    expectKw("endrule");
    parseEndLabel(s->name);
    return s;
  }

  StmtPtr parseMethodDef() {
    SourceLoc loc = expectKw("method").loc;
    StmtPtr s = newStmt(Stmt::Kind::MethodDef, loc);
    // Optional protocol/result type before the name.
    if (at(TokenKind::Ident) &&
        (peek().is(TokenKind::Ident) || peek().isOp("#") ||
         (cur().text == "UInt" && peek().isPunct("(")))) {
      s->declType = parseType();
    }
    s->name = expectIdent("method name").text;
    expectPunct("(");
    if (!atPunct(")")) {
      while (true) {
        TypeRef ft;
        if (!peek().isPunct(",") && !peek().isPunct(")")) ft = parseType();
        std::string fn = expectIdent("formal name").text;
        s->formals.emplace_back(ft, fn);
        if (atPunct(",")) {
          take();
          continue;
        }
        break;
      }
    }
    expectPunct(")");
    if (atKw("if")) {
      take();
      expectPunct("(");
      s->guard = parseBExpr();
      expectPunct(")");
    }
    expectPunct(";");
    while (!atKw("endmethod")) s->body.push_back(parseStmt());
    expectKw("endmethod");
    parseEndLabel(s->name);
    return s;
  }

  StmtPtr parseCase() {
    SourceLoc loc = expectKw("case").loc;
    expectPunct("(");
    StmtPtr s = newStmt(Stmt::Kind::Case, loc);
    s->subject = parseExpr();
    expectPunct(")");
    while (!atKw("endcase")) {
      if (atKw("default")) {
        SourceLoc dloc = take().loc;
        expectOp(":");
        if (s->caseDefault) throw err(dloc, "duplicate default arm");
        s->caseDefault = parseStmt();
        continue;
      }
      ExpPtr label = parseExpr();
      expectOp(":");
      s->caseArms.emplace_back(label, parseStmt());
    }
    expectKw("endcase");
    return s;
  }

  // ---- FSM sub-language ----------------------------------------------------

  FsmStmtPtr newFsm(FsmStmt::Kind k, SourceLoc loc) {
    auto f = std::make_shared<FsmStmt>();
    f->kind = k;
    f->loc = std::move(loc);
    return f;
  }

  FsmStmtPtr parseFsmStmt() {
    if (atKw("seq") || atKw("par")) {
      bool isSeq = atKw("seq");
      SourceLoc loc = take().loc;
      FsmStmtPtr f = newFsm(isSeq ? FsmStmt::Kind::Seq : FsmStmt::Kind::Par, loc);
      const char* endKw = isSeq ? "endseq" : "endpar";
      while (!atKw(endKw)) f->body.push_back(parseFsmStmt());
      take();
      return f;
    }
    if (atKw("if")) {
      SourceLoc loc = take().loc;
      expectPunct("(");
      BExpPtr cond = parseBExpr();
      expectPunct(")");
      FsmStmtPtr f = newFsm(FsmStmt::Kind::If, loc);
      f->cond = cond;
      f->thenS = parseFsmStmt();
      if (atKw("else")) {
        take();
        f->elseS = parseFsmStmt();
      }
      return f;
    }
    if (atKw("while")) {
      SourceLoc loc = take().loc;
      expectPunct("(");
      BExpPtr cond = parseBExpr();
      expectPunct(")");
      FsmStmtPtr f = newFsm(FsmStmt::Kind::While, loc);
      f->cond = cond;
      f->thenS = parseFsmStmt();
      return f;
    }
    if (atKw("repeat")) {
      SourceLoc loc = take().loc;
      FsmStmtPtr f = newFsm(FsmStmt::Kind::Repeat, loc);
      f->thenS = parseFsmStmt();
      return f;
    }
    if (atKw("break")) {
      SourceLoc loc = take().loc;
      expectPunct(";");
      return newFsm(FsmStmt::Kind::Break, loc);
    }
    if (atKw("continue")) {
      SourceLoc loc = take().loc;
      expectPunct(";");
      return newFsm(FsmStmt::Kind::Continue, loc);
    }
    // Leaf step: a register write or a method call, as an expression action.
    if (at(TokenKind::Ident)) {
      SourceLoc loc = cur().loc;
      if (peek().isOp("<=")) {
        std::string name = take().text;
        take();  // <=
        ExpPtr rhs = parseExpr();
        expectPunct(";");
        auto e = std::make_shared<Exp>();
        e->kind = Exp::Kind::Apply;
        e->applyPath = {name, "_write"};
        e->args.push_back(rhs);
        e->loc = loc;
        FsmStmtPtr f = newFsm(FsmStmt::Kind::Action, loc);
        f->action = e;
        return f;
      }
      ExpPtr e = parseExpr();
      if (e->kind != Exp::Kind::Apply)
        throw err(loc, "FSM step must be a register write or a method call");
      expectPunct(";");
      FsmStmtPtr f = newFsm(FsmStmt::Kind::Action, loc);
      f->action = e;
      return f;
    }
    throw expected("FSM statement");
  }
};

}  // namespace

ast::SurfaceAst parseUnit(const std::vector<std::vector<Token>>& files) {
  SurfaceAst unit;
  for (const auto& toks : files) {
    Parser p(toks);
    p.parseInto(unit);
  }
  return unit;
}

ast::SurfaceAst parseSource(const std::string& fileName, const std::string& text) {
  return parseUnit({tokenize(fileName, text)});
}

}  // namespace bluec
