#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace opval::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;     // not converged / failed rows / l1 above threshold
inline constexpr int kExitWrongRoot = 2;  // converged outside A_+
inline constexpr int kExitUsage = 64;
inline constexpr int kExitData = 65;

// args excludes the program name. Diagnostics go to err; results without an
// --out path go to out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace opval::cli
