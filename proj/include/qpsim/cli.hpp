#pragma once

namespace qpsim::cli {

// Parses arguments, dispatches the subcommand, and maps outcomes onto the
// documented exit codes: 0 success, 2 usage/config errors, 3 infeasible
// missions, 4 in-flight safety failures.
int run(int argc, char** argv);

}  // namespace qpsim::cli
