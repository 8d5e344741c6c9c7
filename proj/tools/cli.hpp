#pragma once

// Command-line front end: scenario validation, single equilibrium solves,
// participation-game runs, and alpha sweeps with plotter-ready reports.

#include <string>
#include <vector>

namespace cestrade::cli {

// Exit codes: 0 success, 1 validation/usage failure, 2 solver failure.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace cestrade::cli
