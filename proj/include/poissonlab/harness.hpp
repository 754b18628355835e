#pragma once

#include <string>

#include "poissonlab/variational.hpp"

namespace plab {

// Runs one subcommand ("simulate", "clark-ocone", "girsanov-check",
// "transport-check", "duality") from a JSON configuration document.
// Writes CSV results plus a run manifest into the output directory.
// Returns 0 when all asserted tolerances pass, 1 on a tolerance failure.
// Invalid configurations throw ConfigError (the CLI maps that to exit 2).
struct RunOutcome {
  int exit_code = 0;
  std::string report;  // human-readable summary
};

RunOutcome run_subcommand(const std::string& subcommand, const std::string& config_json,
                          const std::string& out_dir_override, long long seed_override,
                          int workers_override);

std::string library_version();

}  // namespace plab
