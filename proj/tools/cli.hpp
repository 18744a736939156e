#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace kanfit::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kValidation = 3, kRuntime = 4 };

/// Runs one `kanfit` invocation. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

}  // namespace kanfit::cli
