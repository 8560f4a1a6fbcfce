#pragma once

#include "bluec/ast.hpp"

namespace bluec {

// Removes register-access sugar: `x <= e` statements become explicit
// `x._write(e)` calls and bare mentions of registers in expression position
// become `x._read()` calls. `write`/`read` method spellings are normalized
// to `_write`/`_read`. The rewrite is purely syntactic (name resolution is
// deferred to elaboration) and idempotent.
ast::SurfaceAst desugarSugar(const ast::SurfaceAst& unit);

}  // namespace bluec
