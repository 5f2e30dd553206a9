#pragma once

#include <string>
#include <vector>

namespace gibbslab::cli {

// 0 ok, 2 when a requested verification came out Refuted or failed its tolerance, 1 on error
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args[0] is the program name

}  // namespace gibbslab::cli
