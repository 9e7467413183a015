#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace biopsim::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kBadArguments = 2,
  kCalibrationFailed = 3,
  kBadInputFile = 4,
  kEmptySegmentation = 5,
};

/// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Hex SHA-256 of a file's bytes (empty string if unreadable).
std::string sha256_file(const std::string& path);
std::string sha256_hex(const std::string& bytes);

}  // namespace biopsim::cli
