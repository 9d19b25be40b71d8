#pragma once

#include <string>
#include <vector>

namespace modal::cli {

/// Entry point shared by the binary and the tests.
/// Exit codes: 0 success, 2 input error, 3 numerical failure.
int run(const std::vector<std::string>& args);

} // namespace modal::cli
