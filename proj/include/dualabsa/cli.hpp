#pragma once

#include <ostream>

namespace dualabsa {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "DUALABSA_OUT_DIR";

/// Entry point of the `dualabsa` tool. Reports go to `out`, progress and
/// diagnostics to `err`. Returns 0 on success, 1 on data or model errors and
/// 2 on usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dualabsa
