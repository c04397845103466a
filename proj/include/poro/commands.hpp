#pragma once

#include "poro/config.hpp"

#include <ostream>

namespace poro {

/// Runs one simulation and writes diagnostics.csv, fields_<step>.vtk and
/// run.log into config.out_dir. Returns the process exit status.
int cmd_run(const RunConfig& config, std::ostream& console);

/// Runs the benchmark on each mesh in config.refinements and writes rates.csv.
int cmd_convergence(const RunConfig& config, std::ostream& console);

/// Runs the benchmark for each storage coefficient in config.c0_list and
/// writes sweep.csv.
int cmd_sweep(const RunConfig& config, std::ostream& console);

/// Column order of diagnostics.csv.
const std::vector<std::string>& diagnostics_columns();
const std::vector<std::string>& rates_columns();
const std::vector<std::string>& sweep_columns();

} // namespace poro
