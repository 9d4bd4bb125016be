#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace thrlasso {

/// Entry point of the thrlasso command line tool; args[0] is the program name.
/// Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace thrlasso
