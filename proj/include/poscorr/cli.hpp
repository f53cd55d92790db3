#pragma once

// Command-line front end. Every subcommand writes its data files plus a
// manifest.json into --out; failures write error.json there instead.

#include <string>
#include <vector>

namespace poscorr {

/// Arguments exclude the program name. Returns the process exit status.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

std::string version_string();

}  // namespace poscorr
