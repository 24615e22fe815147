#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace stackbench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one command line (without the program name). Usage errors print help
/// to `err` and return 1; data, fit and I/O failures print a diagnostic to
/// `err` and return 2.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string version_text();

}  // namespace stackbench
