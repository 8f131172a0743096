#pragma once

#include <string>
#include <vector>

namespace dada::cli {

// Full command-line front end. Returns the process exit code:
// 0 success, 1 runtime failure, 2 configuration/validation error.
int run(const std::vector<std::string>& args);

}  // namespace dada::cli
