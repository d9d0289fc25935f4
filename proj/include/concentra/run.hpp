#pragma once

#include <string>

#include "concentra/config.hpp"

namespace concentra {

/// Dispatches one experiment subcommand; writes CSV/JSON artifacts into
/// cfg.out_dir. Throws ConfigError on validation problems and SolverError
/// on non-convergence (the CLI maps these to exit codes 2 and 3).
void run_subcommand(const std::string& name, const ExperimentConfig& cfg);

/// Independent-task helper capped by the CONCENTRA_THREADS environment
/// variable (default 1 = serial). Exceptions rethrow in task order.
void parallel_for(long count, const std::function<void(long)>& task);

}  // namespace concentra
