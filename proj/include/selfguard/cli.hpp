#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace selfguard {

/// Exit codes: 0 all post-tests pass (or replay reproduced the recorded final
/// state), 1 a post-test failed (or replay diverged), 2 usage or parse error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDefeat = 1;
inline constexpr int kExitSpecError = 2;

/// Environment variable naming the default --report-format.
inline constexpr const char* kReportFormatEnv = "SELFGUARD_REPORT_FORMAT";

/// Entry point behind the selfguard binary. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace selfguard
