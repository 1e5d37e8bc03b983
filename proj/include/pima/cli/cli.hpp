#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pima::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kUsageError = 2;

/// Runs one command; args excludes the program name. Errors are written to
/// `err` as a single "error: <kind>: <message>" line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pima::cli
