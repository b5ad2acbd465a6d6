#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace floc::cli {

enum ExitCode : int { kOk = 0, kUserError = 1, kInternalError = 2 };

/// Entry point shared by the `floc` binary and the tests. args excludes argv[0].
/// Machine-readable results go to `out` as single-line JSON; diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace floc::cli
