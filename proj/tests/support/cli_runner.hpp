#pragma once

// Runs the rwe-nas binary through the shell and captures stdout.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace cli {

struct Result {
  int code = -1;
  std::string out;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// `args` is appended verbatim; stderr goes to <scratch>/stderr.txt.
inline Result run(const std::string& args, const std::filesystem::path& scratch,
                  const std::string& env = "") {
  std::filesystem::create_directories(scratch);
  const auto out = scratch / "stdout.txt";
  const std::string cmd = env + " '" RWE_NAS_BIN "' " + args + " >'" + out.string() + "' 2>'" +
                          (scratch / "stderr.txt").string() + "'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  return r;
}

}  // namespace cli
