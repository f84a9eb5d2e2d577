#pragma once

#include <ostream>
#include <string>

namespace ouq::cli {

inline constexpr const char* kToolName = "burgers-ouq";
inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kNumericFailure = 1, kUsage = 2 };

/// Entry point of the command-line tool. Normal output goes to `out`,
/// diagnostics to `err`. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string config_hash(const std::string& text);

} // namespace ouq::cli
