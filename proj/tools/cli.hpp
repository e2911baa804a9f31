#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ssmlab::cli {

// Exit codes: 0 success, 1 runtime error, 2 validation or usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ssmlab::cli
