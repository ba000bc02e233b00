#pragma once

#include <string>
#include <vector>

namespace ktlab::cli {

// Entry point shared by the binary and the tests. args excludes the program
// name. Exit codes: 0 success, 1 usage/config error, 2 data error,
// 3 numeric/training error. Diagnostics go to the error stream.
int run(const std::vector<std::string>& args);

} // namespace ktlab::cli
