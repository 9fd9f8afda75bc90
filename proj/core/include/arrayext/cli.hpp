#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace arrayext {

/// Entry point of the `arrayext` tool. args[0] is the program name.
/// Subcommands: synth, train, predict, music, mc, plot-data.
/// Returns 0 on success; diagnostics go to `err`.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_dispatch(int argc, const char* const* argv);

}  // namespace arrayext
