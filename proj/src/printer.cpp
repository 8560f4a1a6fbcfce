#include "bluec/printer.hpp"

#include <sstream>

namespace bluec {

using namespace ast;

namespace {

class Printer {
 public:
  std::string run(const SurfaceAst& unit) {
    for (const auto& ifc : unit.interfaces) printInterface(ifc);
    for (const auto& mod : unit.modules) printModule(mod);
    return out_.str();
  }

  std::string exp(const Exp& e) { return expStr(e); }
  std::string bexp(const BExp& b) { return bexpStr(b); }

 private:
  std::ostringstream out_;
  int indent_ = 0;

  void line(const std::string& s) {
    for (int i = 0; i < indent_; ++i) out_ << "   ";
    out_ << s << "\n";
  }

  static std::string escape(const std::string& s) {
    std::string r;
    for (char c : s) {
      switch (c) {
        case '\n': r += "\\n"; break;
        case '\t': r += "\\t"; break;
        case '\\': r += "\\\\"; break;
        case '"': r += "\\\""; break;
        default: r.push_back(c);
      }
    }
    return r;
  }

  static std::string typeStr(const TypeRef& t) {
    if (t.name == "UInt" && t.num >= 0) return "UInt(" + std::to_string(t.num) + ")";
    std::string s = t.name;
    if (t.elem) s += "#(" + typeStr(*t.elem) + ")";
    else if (t.num >= 0) s += "#(" + std::to_string(t.num) + ")";
    return s;
  }

  std::string expStr(const Exp& e) {
    switch (e.kind) {
      case Exp::Kind::Num:
        return std::to_string(e.num);
      case Exp::Kind::Str:
        return "\"" + escape(e.str) + "\"";
      case Exp::Kind::Var:
        return e.name;
      case Exp::Kind::IfcRef:
        return e.name;
      case Exp::Kind::BoolLift:
        return bexpStr(*e.cond);
      case Exp::Kind::Query:
        return "(" + bexpStr(*e.cond) + " ? " + expStr(*e.a) + " : " + expStr(*e.b) + ")";
      case Exp::Kind::Diadic: {
        const char* op = e.diop == DiOp::Add ? " + " : e.diop == DiOp::Sub ? " - " : " * ";
        return "(" + expStr(*e.a) + op + expStr(*e.b) + ")";
      }
      case Exp::Kind::Apply: {
        std::string s;
        for (size_t i = 0; i < e.applyPath.size(); ++i) {
          if (i) s += ".";
          s += e.applyPath[i];
        }
        s += "(";
        for (size_t i = 0; i < e.args.size(); ++i) {
          if (i) s += ", ";
          s += expStr(*e.args[i]);
        }
        s += ")";
        return s;
      }
      case Exp::Kind::Fsm:
        return "<fsm>";  // FSM statements print through stmtFsm, not here
    }
    return "<exp>";
  }

  std::string bexpStr(const BExp& b) {
    switch (b.kind) {
      case BExp::Kind::True:
        return "True";
      case BExp::Kind::False:
        return "False";
      case BExp::Kind::Firing:
        return "firing(" + b.name + ")";
      case BExp::Kind::Not:
        return "(!" + bexpStr(*b.terms[0]) + ")";
      case BExp::Kind::And:
      case BExp::Kind::Or: {
        const char* op = b.kind == BExp::Kind::And ? " && " : " || ";
        std::string s = "(";
        for (size_t i = 0; i < b.terms.size(); ++i) {
          if (i) s += op;
          s += bexpStr(*b.terms[i]);
        }
        return s + ")";
      }
      case BExp::Kind::Cmp: {
        const char* op = nullptr;
        switch (b.cmp) {
          case CmpOp::Lt: op = " < "; break;
          case CmpOp::Le: op = " <= "; break;
          case CmpOp::Gt: op = " > "; break;
          case CmpOp::Ge: op = " >= "; break;
          case CmpOp::Eq: op = " == "; break;
          case CmpOp::Ne: op = " != "; break;
        }
        return "(" + expStr(*b.operands[0]) + op + expStr(*b.operands[1]) + ")";
      }
      case BExp::Kind::Orred:
        return "(" + expStr(*b.operands[0]) + ")";
    }
    return "<bexp>";
  }

  void printAttrs(const std::vector<Attr>& attrs) {
    for (const auto& a : attrs) {
      if (a.value.empty()) line("(* " + a.name + " *)");
      else line("(* " + a.name + " = \"" + escape(a.value) + "\" *)");
    }
  }

  void printInterface(const InterfaceDecl& ifc) {
    std::string head = "interface " + ifc.name;
    if (!ifc.genericParams.empty()) {
      head += "#(";
      for (size_t i = 0; i < ifc.genericParams.size(); ++i) {
        if (i) head += ", ";
        head += "type " + ifc.genericParams[i];
      }
      head += ")";
    }
    line(head + ";");
    ++indent_;
    for (const auto& m : ifc.methods) {
      for (Proviso p : m.provisos)
        line(p == Proviso::AlwaysReady ? "(* always_ready *)" : "(* always_enabled *)");
      std::string proto = "method ";
      switch (m.protocol) {
        case Protocol::Action: proto += "Action "; break;
        case Protocol::ActionValue: proto += "ActionValue#(" + typeStr(m.retType) + ") "; break;
        case Protocol::Value: proto += typeStr(m.retType) + " "; break;
      }
      proto += m.name + " (";
      for (size_t i = 0; i < m.formals.size(); ++i) {
        if (i) proto += ", ";
        proto += typeStr(m.formals[i].first) + " " + m.formals[i].second;
      }
      line(proto + ");");
    }
    --indent_;
    line("endinterface");
    line("");
  }

  void printModule(const ModuleDef& mod) {
    printAttrs(mod.attrs);
    std::string head = "module " + mod.name;
    if (!mod.params.empty()) {
      head += " #(";
      for (size_t i = 0; i < mod.params.size(); ++i) {
        if (i) head += ", ";
        head += typeStr(mod.params[i].first) + " " + mod.params[i].second;
      }
      head += ")";
    }
    line(head + " (" + mod.ifcName + ");");
    ++indent_;
    for (const auto& s : mod.body) printStmt(*s);
    --indent_;
    line("endmodule: " + mod.name);
    line("");
  }

  void printStmt(const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::VarDeclAssign: {
        std::string l = typeStr(s.declType) + " " + s.name + " <- " + s.ctor;
        if (!s.ctorArgs.empty()) {
          l += " (";
          for (size_t i = 0; i < s.ctorArgs.size(); ++i) {
            if (i) l += ", ";
            l += expStr(*s.ctorArgs[i]);
          }
          l += ")";
        }
        line(l + ";");
        return;
      }
      case Stmt::Kind::Rule:
        printAttrs(s.attrs);
        line("rule " + s.name + " (" + bexpStr(*s.guard) + ");");
        ++indent_;
        for (const auto& b : s.body) printStmt(*b);
        --indent_;
        line("endrule");
        return;
      case Stmt::Kind::Assign:
        if (!s.declType.empty()) line(typeStr(s.declType) + " " + s.name + " = " + expStr(*s.value) + ";");
        else line("let " + s.name + " = " + expStr(*s.value) + ";");
        return;
      case Stmt::Kind::RegWrite:
        line(s.name + " <= " + expStr(*s.value) + ";");
        return;
      case Stmt::Kind::ActionCall:
        if (s.value->kind == Exp::Kind::Fsm) {
          printFsm(*s.value->fsm);
          return;
        }
        line(expStr(*s.value) + ";");
        return;
      case Stmt::Kind::Pli: {
        std::string l = s.pli + " (";
        for (size_t i = 0; i < s.args.size(); ++i) {
          if (i) l += ", ";
          l += expStr(*s.args[i]);
        }
        line(l + ");");
        return;
      }
      case Stmt::Kind::BeginEnd:
        line("begin");
        ++indent_;
        for (const auto& b : s.body) printStmt(*b);
        --indent_;
        line("end");
        return;
      case Stmt::Kind::If:
        line("if (" + bexpStr(*s.cond) + ")");
        ++indent_;
        printStmt(*s.thenS);
        --indent_;
        if (s.elseS) {
          line("else");
          ++indent_;
          printStmt(*s.elseS);
          --indent_;
        }
        return;
      case Stmt::Kind::While:
        line("while (" + bexpStr(*s.cond) + ")");
        ++indent_;
        printStmt(*s.thenS);
        --indent_;
        return;
      case Stmt::Kind::Return:
        line("return " + expStr(*s.value) + ";");
        return;
      case Stmt::Kind::Case:
        line("case (" + expStr(*s.subject) + ")");
        ++indent_;
        for (const auto& [label, arm] : s.caseArms) {
          line(expStr(*label) + ":");
          ++indent_;
          printStmt(*arm);
          --indent_;
        }
        if (s.caseDefault) {
          line("default:");
          ++indent_;
          printStmt(*s.caseDefault);
          --indent_;
        }
        --indent_;
        line("endcase");
        return;
      case Stmt::Kind::MethodDef: {
        std::string head = "method ";
        if (!s.declType.empty()) head += typeStr(s.declType) + " ";
        head += s.name + " (";
        for (size_t i = 0; i < s.formals.size(); ++i) {
          if (i) head += ", ";
          if (!s.formals[i].first.empty()) head += typeStr(s.formals[i].first) + " ";
          head += s.formals[i].second;
        }
        head += ")";
        if (s.guard) head += " if (" + bexpStr(*s.guard) + ")";
        line(head + ";");
        ++indent_;
        for (const auto& b : s.body) printStmt(*b);
        --indent_;
        line("endmethod");
        return;
      }
      case Stmt::Kind::PrimBuffer:
        line("primBuffer (" + expStr(*s.args[0]) + ", " + expStr(*s.args[1]) + ");");
        return;
    }
  }

  void printFsm(const FsmStmt& f) {
    switch (f.kind) {
      case FsmStmt::Kind::Seq:
      case FsmStmt::Kind::Par: {
        bool isSeq = f.kind == FsmStmt::Kind::Seq;
        line(isSeq ? "seq" : "par");
        ++indent_;
        for (const auto& b : f.body) printFsm(*b);
        --indent_;
        line(isSeq ? "endseq" : "endpar");
        return;
      }
      case FsmStmt::Kind::If:
        line("if (" + bexpStr(*f.cond) + ")");
        ++indent_;
        printFsm(*f.thenS);
        --indent_;
        if (f.elseS) {
          line("else");
          ++indent_;
          printFsm(*f.elseS);
          --indent_;
        }
        return;
      case FsmStmt::Kind::While:
        line("while (" + bexpStr(*f.cond) + ")");
        ++indent_;
        printFsm(*f.thenS);
        --indent_;
        return;
      case FsmStmt::Kind::Repeat:
        line("repeat");
        ++indent_;
        printFsm(*f.thenS);
        --indent_;
        return;
      case FsmStmt::Kind::Action:
        line(expStr(*f.action) + ";");
        return;
      case FsmStmt::Kind::Break:
        line("break;");
        return;
      case FsmStmt::Kind::Continue:
        line("continue;");
        return;
    }
  }
};

}  // namespace

std::string printUnit(const ast::SurfaceAst& unit) {
  Printer p;
  return p.run(unit);
}

std::string printExp(const ast::Exp& e) {
  Printer p;
  return p.exp(e);
}

std::string printBExp(const ast::BExp& b) {
  Printer p;
  return p.bexp(b);
}

}  // namespace bluec
