#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spt {

// Command-line front end (testable entry point). Subcommands: tune, minimize,
// modes, energy, sweep, spectrum, partition, extrapolate, compare, cache.
// Exit codes: 0 success, 1 argument error, 2 configuration/validation error,
// 3 computation failure (stage-tagged message on err), 4 I/O error.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spt
