#include <string>

#include "bluec/netlist.hpp"
#include "vendor/json.hpp"

namespace bluec::rtl {

namespace {

std::string vexpr(const core::ExprPtr& e) {
  using K = core::Expr::Kind;
  switch (e->kind) {
    case K::Const:
      return std::to_string(e->width) + "'d" + std::to_string(e->value);
    case K::Net:
      return e->str;
    case K::Un:
      if (e->un == core::UnOp::Not) return "(!" + vexpr(e->a) + ")";
      return "(|" + vexpr(e->a) + ")";
    case K::Bin: {
      const char* op = "+";
      switch (e->bin) {
        case core::BinOp::Add: op = "+"; break;
        case core::BinOp::Sub: op = "-"; break;
        case core::BinOp::Mul: op = "*"; break;
        case core::BinOp::Lt: op = "<"; break;
        case core::BinOp::Le: op = "<="; break;
        case core::BinOp::Gt: op = ">"; break;
        case core::BinOp::Ge: op = ">="; break;
        case core::BinOp::Eq: op = "=="; break;
        case core::BinOp::Ne: op = "!="; break;
        case core::BinOp::And: op = "&&"; break;
        case core::BinOp::Or: op = "||"; break;
      }
      return "(" + vexpr(e->a) + " " + op + " " + vexpr(e->b) + ")";
    }
    case K::Mux:
      return "(" + vexpr(e->c) + " ? " + vexpr(e->a) + " : " + vexpr(e->b) + ")";
    default:
      throw std::logic_error("unlowered expression in verilog emission");
  }
}

std::string range(int width) {
  if (width <= 1) return "";
  return "[" + std::to_string(width - 1) + ":0] ";
}

}  // namespace

std::string verilogText(const Netlist& nl) {
  std::string out;
  out += "module " + nl.top + "(\n  input clk,\n  input rst\n);\n\n";

  std::vector<bool> isReg(nl.nets.size(), false);
  for (const auto& r : nl.regs) isReg[static_cast<size_t>(r.q)] = true;

  for (const auto& r : nl.regs)
    out += "  reg " + range(r.width) + r.name + ";\n";
  out += "\n";
  for (size_t k = 0; k < nl.nets.size(); ++k) {
    if (isReg[k]) continue;
    out += "  wire " + range(nl.nets[k].width) + nl.nets[k].name + ";\n";
  }
  out += "\n";
  for (size_t k = 0; k < nl.nets.size(); ++k) {
    if (isReg[k] || !nl.nets[k].driver) continue;
    out += "  assign " + nl.nets[k].name + " = " + vexpr(nl.nets[k].driver) + ";\n";
  }

  out += "\n  always @(posedge clk) begin\n    if (rst) begin\n";
  for (const auto& r : nl.regs) {
    out += "      " + r.name + " <= " + std::to_string(r.width) + "'d" +
           std::to_string(r.reset) + ";\n";
  }
  out += "    end else begin\n";
  for (const auto& r : nl.regs) {
    out += "      if (" + nl.nets[static_cast<size_t>(r.enable)].name + ") " + r.name +
           " <= " + nl.nets[static_cast<size_t>(r.data)].name + ";\n";
  }
  out += "    end\n  end\n\nendmodule\n";
  return out;
}

std::string netlistJson(const Netlist& nl) {
  nlohmann::json j;
  j["top"] = nl.top;
  j["nets"] = nlohmann::json::array();
  for (const auto& n : nl.nets) {
    nlohmann::json e;
    e["name"] = n.name;
    e["width"] = n.width;
    if (n.driver) e["assign"] = core::exprStr(n.driver);
    j["nets"].push_back(e);
  }
  j["registers"] = nlohmann::json::array();
  for (const auto& r : nl.regs) {
    nlohmann::json e;
    e["name"] = r.name;
    e["width"] = r.width;
    e["reset"] = r.reset;
    e["enable"] = nl.nets[static_cast<size_t>(r.enable)].name;
    e["data"] = nl.nets[static_cast<size_t>(r.data)].name;
    j["registers"].push_back(e);
  }
  return j.dump(2) + "\n";
}

}  // namespace bluec::rtl
