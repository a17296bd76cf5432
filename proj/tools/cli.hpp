#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace triage::cli {

/// Exit codes: 0 success, 1 IO/config/input errors, 2 usage errors.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace triage::cli
