#pragma once

#include <string>

#include "bluec/ast.hpp"

namespace bluec {

// Deterministic pretty-printer for the surface AST. Output is valid input
// for the parser; printing, re-parsing and printing again is a fixpoint,
// which is how tests compare trees structurally.
std::string printUnit(const ast::SurfaceAst& unit);
std::string printExp(const ast::Exp& e);
std::string printBExp(const ast::BExp& b);

}  // namespace bluec
