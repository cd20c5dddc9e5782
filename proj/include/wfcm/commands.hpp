#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "wfcm/io.hpp"

namespace wfcm {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitNumerical = 3, kExitPartial = 4 };

const std::vector<std::string>& command_names();

/// Merges flag overrides into the file config (flags win), fills the seed
/// default from WFCM_SEED, and rejects unknown keys naming the offending field.
Json resolve_config(Json file_config, const Json& overrides);

/// Runs one subcommand on a resolved config, writing artifacts and a run
/// manifest into config["out_dir"]. Errors are reported on `err` and mapped
/// to the exit code.
int run_command(const std::string& name, const Json& config, std::ostream& out, std::ostream& err);

FitConfig fit_config_from_json(const Json& config);

}  // namespace wfcm
