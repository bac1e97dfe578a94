#pragma once

#include <string>
#include <vector>

namespace swedge {

// Exit codes: 0 success, 1 usage error, 2 data/estimation error.
int parse_and_dispatch(const std::vector<std::string>& args);
int parse_and_dispatch(int argc, const char* const* argv);

}  // namespace swedge
