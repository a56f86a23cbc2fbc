#pragma once

#include <string>
#include <vector>

namespace gradmine::cli {

// Exit codes: 0 success, 2 usage or validation failure, 3 divergence.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDivergence = 3;

int run(int argc, char** argv);
// Same, with args[0] taken as the program name.
int run(const std::vector<std::string>& args);

}  // namespace gradmine::cli
