#pragma once

#include <string>

namespace bluec {

// A position in one of the input files. Column and line are 1-based; a
// default-constructed location (line 0) means "no position available".
struct SourceLoc {
  std::string file;
  int line = 0;
  int col = 0;

  bool valid() const { return line > 0; }
  std::string str() const {
    if (!valid()) return file.empty() ? "<unknown>" : file;
    return file + ":" + std::to_string(line) + ":" + std::to_string(col);
  }
};

}  // namespace bluec
