#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vmic::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kInput = 3,
  kNumeric = 4,
};

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vmic::cli
