#pragma once

#include <iosfwd>
#include <string>

#include "droplet/errors.hpp"
#include "droplet/run_config.hpp"

namespace droplet {

/// Process-level outcome of a run, mapped by the CLI onto exit codes.
enum class RunStatus {
    Ok = 0,
    ConfigFailure = 2,    ///< bad configuration or parameters
    PhysicsAbort = 3,     ///< validity guard stopped the run (boundary, no droplet)
    NumericalFailure = 4  ///< NaN/divergence
};

struct RunOutcome {
    RunStatus status = RunStatus::Ok;
    std::string message;         ///< human-readable failure/abort detail
    WarningLog warnings;
    std::string output_dir;      ///< as used (empty for pure predict)
};

/// Executes the selected mode end to end and writes the run artifacts
/// (manifest, time-series CSV, snapshot files, estimate report, plot data)
/// under config.output_dir. `report` receives the human-readable summary
/// (predict output, estimate lines). Never throws for run-level failures;
/// they are encoded in the returned status.
RunOutcome run(const RunConfig& config, std::ostream& report);

/// Runs the dt-halving convergence probe for the configured run and reports
/// the probe table and the accepted step.
RunOutcome run_convergence_probe(const RunConfig& config, std::ostream& report);

}  // namespace droplet
