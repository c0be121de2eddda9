#pragma once

#include <stdexcept>
#include <string>

namespace rml::cli {

// Exit codes: 0 success, 1 runtime/numerical failure, 2 usage/validation.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Validation problems (bad flags, missing files, infeasible parameters).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int cli_main(int argc, const char* const* argv);

}  // namespace rml::cli
