#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace benfrag::cli {

enum ExitCode { kOk = 0, kValidation = 1, kNumerical = 2 };

/// Runs one invocation; args excludes the program name. Results without an
/// --out path go to `out`, the one-line error to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace benfrag::cli
