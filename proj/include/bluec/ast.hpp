#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bluec/source.hpp"

// Surface abstract syntax. The tree is split into integer expressions (Exp),
// boolean expressions (BExp), FSM statements, and module statements. Control
// flow at this level is elaboration-time only; the elaborator either unrolls
// it or turns it into per-action enabling conditions.
namespace bluec::ast {

struct Exp;
struct BExp;
struct FsmStmt;
struct Stmt;
using ExpPtr = std::shared_ptr<Exp>;
using BExpPtr = std::shared_ptr<BExp>;
using FsmStmtPtr = std::shared_ptr<FsmStmt>;
using StmtPtr = std::shared_ptr<Stmt>;

// Type references as parsed: a head name plus at most one element type and
// at most one numeric parameter. Covers int, UInt(n), Reg#(t), FIFO#(t),
// SyncRAM#(t), Action, ActionValue#(t) and plain interface names.
struct TypeRef {
  std::string name;
  std::shared_ptr<TypeRef> elem;  // Reg#(elem), FIFO#(elem), ActionValue#(elem), ...
  int num = -1;                   // UInt(num)
  SourceLoc loc;

  bool empty() const { return name.empty(); }
};

enum class DiOp { Add, Sub, Mul };
enum class CmpOp { Lt, Le, Gt, Ge, Eq, Ne };

struct BExp {
  enum class Kind {
    True,
    False,
    Firing,  // firing(rule): another rule's grant, usable in guards
    Not,
    And,     // n-ary conjunction
    Or,      // n-ary disjunction
    Cmp,     // comparison over two integer operands
    Orred,   // or-reduction of an integer operand (nonzero test)
  };
  Kind kind;
  std::string name;             // Firing: rule name
  std::vector<BExpPtr> terms;   // And/Or members; Not uses terms[0]
  CmpOp cmp = CmpOp::Lt;
  std::vector<ExpPtr> operands; // Cmp: two; Orred: one
  SourceLoc loc;
};

struct Exp {
  enum class Kind {
    Num,       // integer literal, optionally width-annotated
    BoolLift,  // boolean used in integer position (False/True -> 0/1)
    Query,     // cond ? a : b
    Var,       // plain identifier
    Str,       // string literal (PLI arguments)
    Fsm,       // FSM statement in expression position
    IfcRef,    // name passed as an interface argument to a constructor
    Diadic,    // arithmetic operator
    Apply,     // dotted application: path(args)
  };
  Kind kind;
  uint64_t num = 0;
  int numWidth = -1;           // -1 = unsized literal
  BExpPtr cond;                // Query condition / BoolLift payload
  ExpPtr a, b;                 // Query arms / Diadic operands
  std::string name;            // Var / IfcRef
  std::string str;             // Str (decoded value)
  DiOp diop = DiOp::Add;
  std::vector<std::string> applyPath;  // Apply: ["pipe","send"], ["sizeof"], ...
  std::vector<ExpPtr> args;
  FsmStmtPtr fsm;
  SourceLoc loc;
};

struct FsmStmt {
  enum class Kind { Seq, Par, If, While, Repeat, Action, Break, Continue };
  Kind kind;
  std::vector<FsmStmtPtr> body;  // Seq steps / Par arms
  BExpPtr cond;                  // If/While
  FsmStmtPtr thenS, elseS;       // If arms; While/Repeat body in thenS
  ExpPtr action;                 // Action: an Apply performing the step
  SourceLoc loc;
};

struct Attr {
  std::string name;   // descending_urgency, execution_order, fire_when_enabled, ...
  std::string value;  // contents of the quoted value, if any
  SourceLoc loc;
};

enum class Proviso { AlwaysReady, AlwaysEnabled };
enum class Protocol { Value, ActionValue, Action };

struct MethodProto {
  std::string name;
  Protocol protocol = Protocol::Value;
  TypeRef retType;  // Value/ActionValue result type
  std::vector<std::pair<TypeRef, std::string>> formals;
  std::vector<Proviso> provisos;
  SourceLoc loc;
};

struct InterfaceDecl {
  std::string name;
  std::vector<std::string> genericParams;
  std::vector<MethodProto> methods;
  SourceLoc loc;
};

struct Stmt {
  enum class Kind {
    VarDeclAssign,  // Type name <- ctor(args);
    Rule,           // rule name (guard); body endrule
    Assign,         // let/typed/bare: name = exp;
    RegWrite,       // name <= exp;  (surface sugar, removed by desugaring)
    ActionCall,     // exp; where exp is an application or FSM statement
    Pli,            // $display(...), $finish(...)
    BeginEnd,       // begin/end or action/endaction grouping
    If,
    While,
    Return,
    Case,
    MethodDef,
    PrimBuffer,     // primBuffer(e1, e2);
  };
  Kind kind;
  SourceLoc loc;

  // VarDeclAssign / Assign / RegWrite / Rule / MethodDef share the name slot.
  std::string name;
  TypeRef declType;              // VarDeclAssign / typed Assign ("let" leaves it empty)
  std::string ctor;              // VarDeclAssign constructor name
  std::vector<ExpPtr> ctorArgs;

  BExpPtr guard;                 // Rule / MethodDef explicit guard
  std::vector<StmtPtr> body;     // Rule / BeginEnd / MethodDef bodies
  std::vector<Attr> attrs;       // attributes written before a rule

  ExpPtr value;                  // Assign / RegWrite / ActionCall / Return payload
  std::string pli;               // Pli: task name including '$'
  std::vector<ExpPtr> args;      // Pli / PrimBuffer arguments

  BExpPtr cond;                  // If / While
  StmtPtr thenS, elseS;          // If arms; While body in thenS

  ExpPtr subject;                // Case subject
  std::vector<std::pair<ExpPtr, StmtPtr>> caseArms;
  StmtPtr caseDefault;

  std::vector<std::pair<TypeRef, std::string>> formals;  // MethodDef
};

struct ModuleDef {
  std::string name;
  std::vector<std::pair<TypeRef, std::string>> params;  // #(...) parameters
  std::string ifcName;  // implemented interface; "Empty" when written as ()
  std::vector<StmtPtr> body;
  std::vector<Attr> attrs;
  SourceLoc loc;
};

struct SurfaceAst {
  std::vector<InterfaceDecl> interfaces;
  std::vector<ModuleDef> modules;
};

}  // namespace bluec::ast
