#include "bluec/core.hpp"

#include <algorithm>

namespace bluec::core {

namespace {
std::shared_ptr<Expr> base(Expr::Kind k, int width, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->width = width;
  e->loc = std::move(loc);
  return e;
}
}  // namespace

ExprPtr mkConst(uint64_t v, int width, SourceLoc loc) {
  auto e = base(Expr::Kind::Const, width, std::move(loc));
  e->value = width >= 64 ? v : (v & ((uint64_t{1} << width) - 1));
  return e;
}

ExprPtr mkBool(bool v, SourceLoc loc) { return mkConst(v ? 1 : 0, 1, std::move(loc)); }

ExprPtr mkStr(std::string s, SourceLoc loc) {
  auto e = base(Expr::Kind::Str, 0, std::move(loc));
  e->str = std::move(s);
  return e;
}

ExprPtr mkRead(std::string path, std::string method, std::vector<ExprPtr> args, int width,
               SourceLoc loc) {
  auto e = base(Expr::Kind::Read, width, std::move(loc));
  e->path = std::move(path);
  e->method = std::move(method);
  e->args = std::move(args);
  return e;
}

ExprPtr mkReady(std::string path, std::string method, SourceLoc loc) {
  auto e = base(Expr::Kind::Ready, 1, std::move(loc));
  e->path = std::move(path);
  e->method = std::move(method);
  return e;
}

ExprPtr mkFiring(std::string rule, SourceLoc loc) {
  auto e = base(Expr::Kind::Firing, 1, std::move(loc));
  e->rule = std::move(rule);
  return e;
}

ExprPtr mkBinding(int id, int width, SourceLoc loc) {
  auto e = base(Expr::Kind::Binding, width, std::move(loc));
  e->binding = id;
  return e;
}

ExprPtr mkUn(UnOp op, ExprPtr a, SourceLoc loc) {
  auto e = base(Expr::Kind::Un, 1, std::move(loc));
  e->un = op;
  e->a = std::move(a);
  return e;
}

ExprPtr mkBin(BinOp op, ExprPtr a, ExprPtr b, SourceLoc loc) {
  int width = 1;
  switch (op) {
    case BinOp::Add:
    case BinOp::Sub:
    case BinOp::Mul:
      width = std::max(a->width, b->width);
      break;
    default:
      width = 1;  // comparisons and logic are single-bit
  }
  auto e = base(Expr::Kind::Bin, width, std::move(loc));
  e->bin = op;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

ExprPtr mkMux(ExprPtr cond, ExprPtr a, ExprPtr b, SourceLoc loc) {
  auto e = base(Expr::Kind::Mux, std::max(a->width, b->width), std::move(loc));
  e->c = std::move(cond);
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

ExprPtr mkNet(int id, std::string name, int width, SourceLoc loc) {
  auto e = base(Expr::Kind::Net, width, std::move(loc));
  e->binding = id;
  e->str = std::move(name);
  return e;
}

ExprPtr andAlso(ExprPtr a, ExprPtr b) {
  auto isTrue = [](const ExprPtr& e) {
    return !e || (e->kind == Expr::Kind::Const && e->value != 0);
  };
  if (isTrue(a)) return b;
  if (isTrue(b)) return a;
  return mkBin(BinOp::And, a, b, a->loc);
}

std::string exprStr(const ExprPtr& e) {
  if (!e) return "true";
  switch (e->kind) {
    case Expr::Kind::Const:
      return std::to_string(e->value);
    case Expr::Kind::Str:
      return "\"" + e->str + "\"";
    case Expr::Kind::Read: {
      std::string s = e->path + "." + e->method + "(";
      for (size_t i = 0; i < e->args.size(); ++i) {
        if (i) s += ", ";
        s += exprStr(e->args[i]);
      }
      return s + ")";
    }
    case Expr::Kind::Ready:
      return "ready(" + e->path + "." + e->method + ")";
    case Expr::Kind::Firing:
      return "firing(" + e->rule + ")";
    case Expr::Kind::Binding:
      return "$b" + std::to_string(e->binding);
    case Expr::Kind::Un:
      return (e->un == UnOp::Not ? "!" : "|") + exprStr(e->a);
    case Expr::Kind::Bin: {
      const char* op = "?";
      switch (e->bin) {
        case BinOp::Add: op = "+"; break;
        case BinOp::Sub: op = "-"; break;
        case BinOp::Mul: op = "*"; break;
        case BinOp::Lt: op = "<"; break;
        case BinOp::Le: op = "<="; break;
        case BinOp::Gt: op = ">"; break;
        case BinOp::Ge: op = ">="; break;
        case BinOp::Eq: op = "=="; break;
        case BinOp::Ne: op = "!="; break;
        case BinOp::And: op = "&"; break;
        case BinOp::Or: op = "|"; break;
      }
      return "(" + exprStr(e->a) + " " + op + " " + exprStr(e->b) + ")";
    }
    case Expr::Kind::Mux:
      return "(" + exprStr(e->c) + " ? " + exprStr(e->a) + " : " + exprStr(e->b) + ")";
    case Expr::Kind::Net:
      return e->str;
  }
  return "<expr>";
}

}  // namespace bluec::core
