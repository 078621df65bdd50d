#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mixlab {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one command line (without the program name). Exit codes: 0 success,
/// 1 invalid input, 2 a failed verify check.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mixlab
