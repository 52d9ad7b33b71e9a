#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace bridgelab {

// Entry point shared by the binary and the in-process CLI tests. `args`
// excludes the program name. Returns the process exit code: 0 success,
// 2 configuration / usage error, 3 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

}  // namespace bridgelab
