#ifndef EPIFLOW_RUNNER_HPP
#define EPIFLOW_RUNNER_HPP

#include "epiflow/config.hpp"

namespace epiflow {

/// Execute the configured experiment and write its outputs. Returns the
/// process exit code contract of the CLI: 0 on success; throws Error for
/// runtime failures (mapped to exit 1 by the caller).
void run_experiment(const RunConfig& cfg);

}  // namespace epiflow

#endif
