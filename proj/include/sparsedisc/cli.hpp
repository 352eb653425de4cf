#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sparsedisc::cli {

/// Runs one command line (program name excluded). Exit codes: 0 success,
/// 2 user error, 3 capacity, 4 internal invariant violation.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Name of the environment variable holding the default thread count.
inline constexpr const char* kThreadsEnv = "SPARSEDISC_THREADS";

}  // namespace sparsedisc::cli
