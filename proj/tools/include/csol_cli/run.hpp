#pragma once

#include <string>
#include <vector>

namespace csol::cli {

constexpr const char* kVersion = "0.1.0";

struct RunResult {
  int exit_code = 0;  // 0 pass, 2 mathematical failure, 1 input error
  std::string out;    // report text unless it went to --out
};

// Runs one subcommand; `args` excludes the program name.
RunResult run(const std::vector<std::string>& args);

}  // namespace csol::cli
