#pragma once

#include <string>
#include <vector>

namespace flowadmm::cli {

// Exit codes: 0 success, 2 config/input error, 3 solver divergence,
// 4 partial benchmark failure.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitPartial = 4;

// Full CLI entry point; `args` excludes the program name. All command
// implementations live behind this so tests can drive the real code paths
// in-process.
int run(const std::vector<std::string>& args);

}  // namespace flowadmm::cli
