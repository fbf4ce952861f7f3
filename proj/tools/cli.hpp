#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace drivelearn::cli {

/// Entry point shared by the executable and the tests. Returns 0 on success,
/// 1 on invalid input (flags, files, config), 2 on runtime failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace drivelearn::cli
