#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace define::cli {

// Exit codes: 0 success, 1 user error (bad flags, invalid input, missing
// files or keys), 2 internal error. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace define::cli
