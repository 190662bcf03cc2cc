#pragma once

#include <string>
#include <vector>

namespace totvar::cli {

/// Runs one command line (without the program name). Exit codes: 0 success,
/// 1 usage or input error, 2 numerical failure.
int run(const std::vector<std::string>& args);

int run(int argc, char** argv);

} // namespace totvar::cli
