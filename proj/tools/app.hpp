#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace uqsense::cli {

enum ExitCode { kOk = 0, kFailure = 1, kFormat = 2, kDomain = 3, kConfig = 4 };

/// Runs one command line (args[0] is the program name). Diagnostics go to
/// `err`; small textual results (catalog, summaries) go to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace uqsense::cli
