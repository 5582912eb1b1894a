#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace robustpulse::cli {

// Exit codes: 0 success, 1 domain or I/O error, 2 usage error.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace robustpulse::cli
