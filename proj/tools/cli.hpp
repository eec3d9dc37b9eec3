#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cpf::cli {

enum ExitCode : int {
  kPass = 0,
  kStatisticalFail = 1,
  kConfigError = 2,
  kIoError = 3,
  kNumericalError = 4,
};

// Default output directory when --out is not given.
inline constexpr const char* kOutDirEnv = "CPF_OUT_DIR";

// Runs one command line (without the program name). Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cpf::cli
