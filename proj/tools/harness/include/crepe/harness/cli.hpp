#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace crepe::harness {

inline constexpr int kExitPass = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitParse = 2;

// Entry point shared by the crepe binary and in-process tests. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crepe::harness
