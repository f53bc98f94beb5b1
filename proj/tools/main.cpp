#include <cstdio>
#include <string>
#include <vector>

#include "csol_cli/run.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  csol::cli::RunResult r = csol::cli::run(args);
  std::fwrite(r.out.data(), 1, r.out.size(), stdout);
  return r.exit_code;
}
