#pragma once

#include <string>
#include <vector>

namespace menucsi::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kBackendError = 2 };

// `menucsi <ingest|identify|retrieve|prompt|translate|evaluate|kappa> --config run.toml [flags]`
int run(int argc, const char* const* argv);
// args[0] is the program name.
int run(const std::vector<std::string>& args);

}  // namespace menucsi::cli
