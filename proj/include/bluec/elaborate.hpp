#pragma once

#include <string>

#include "bluec/ast.hpp"
#include "bluec/core.hpp"

namespace bluec {

// Structural elaboration: instantiates the module hierarchy starting at the
// top module, evaluates all elaboration-time control flow, inlines user
// (ephemeral) methods at every call site, desugars FSM statements into
// rules over a generated state register, and returns the flat design.
//
// The input must already be desugared (desugarSugar). Throws CompileError.
core::Design elaborate(const ast::SurfaceAst& unit, const std::string& topName,
                       core::GuardMode mode);

}  // namespace bluec
