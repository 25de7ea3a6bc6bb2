#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sawlab {

// Runs one command line (without the program name). Returns 0 on success,
// 2 when a budget runs out and 1 for invalid input or a failed check.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_command(int argc, const char* const* argv);

}  // namespace sawlab
