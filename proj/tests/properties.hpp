#pragma once

#include <string>
#include <vector>

#include "dfl/verify.hpp"

namespace dfl_tests {

// Every documented library invariant as one named executable property.
// dflsim_path enables the CLI contract checks; pass "" to skip them.
std::vector<dfl::PropertyResult> run_module_properties(const std::string& dflsim_path);

// Exit status and combined stdout+stderr of a shell command.
struct CmdResult {
    int status = -1;
    std::string output;
};
CmdResult run_cmd(const std::string& cmd);

// Fresh scratch directory under the system temp dir; caller removes it.
std::string make_temp_dir(const std::string& tag);

}  // namespace dfl_tests
