#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace iotllm {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitProvider = 3;

/// Runs one CLI invocation. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace iotllm
