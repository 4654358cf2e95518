#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ealm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `ealm` invocation. args excludes the program name. Reports go to
/// out, diagnostics and the resolved configuration to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ealm::cli
