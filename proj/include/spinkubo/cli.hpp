#pragma once

#include <string>

#include "spinkubo/config.hpp"

namespace spinkubo {

// Runs one batch subcommand (bands, gap, projector, sigma, torque,
// conductance, chern, decomposition, oracle-check, sweep) and writes its
// artifact files. Returns 0 on success; failures surface as exceptions
// (ConfigInvalid -> exit 2, NumericalError -> exit 3 in the executable).
int run_subcommand(const std::string& name, const RunConfig& config,
                   const std::string& output_dir_override);

}  // namespace spinkubo
