#pragma once

#include <string>
#include <vector>

namespace sgldlab {

// Entry point behind the command-line binary; exposed so tests can drive the
// exact surface the binary offers. Returns the process exit code.
int cli_main(const std::vector<std::string>& args);

}  // namespace sgldlab
