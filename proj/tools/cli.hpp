#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mfbo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "MFBO_OUTPUT_DIR";

/// Entry point shared by the executable and the tests. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mfbo::cli
