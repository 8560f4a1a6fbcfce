#pragma once

#include <string>
#include <vector>

#include "bluec/ast.hpp"
#include "bluec/token.hpp"

namespace bluec {

// Parses one or more token streams (one per input file) into a single
// compilation unit. Throws CompileError with the offending location and the
// set of expected tokens on a syntax error; constructs outside the accepted
// subset are reported as "not in subset".
ast::SurfaceAst parseUnit(const std::vector<std::vector<Token>>& files);

// Convenience for a single in-memory source.
ast::SurfaceAst parseSource(const std::string& fileName, const std::string& text);

}  // namespace bluec
