#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace cpf::testing {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

inline CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  CliRun r;
  r.code = cpf::cli::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

inline std::filesystem::path config_dir() {
  const char* dir = std::getenv("CPF_CONFIG_DIR");
  return dir ? std::filesystem::path(dir) : std::filesystem::path("configs");
}

inline std::string config(const std::string& name) { return (config_dir() / name).string(); }

// Fresh scratch directory below the test temp root.
inline std::filesystem::path scratch(const std::string& name) {
  const char* root = std::getenv("CPF_TEST_TMP");
  const auto dir = (root ? std::filesystem::path(root) : std::filesystem::temp_directory_path() / "cpf_tests") / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace cpf::testing
