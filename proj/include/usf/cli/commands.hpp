#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "usf/harness/config.hpp"
#include "usf/harness/experiment.hpp"

namespace usf::cli {

/// Entry point of usf_lab: train, eval, plot and verify. Returns 0 on
/// success, 2 for bad arguments or configuration, 1 for runtime failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Runs every seed and writes metrics_seed{N}.csv, metrics.csv,
/// aggregate.csv, config.cfg and checkpoint_stage{K}_seed{N}.bin under `dir`.
std::vector<harness::SeedRun> train(const harness::ExperimentConfig& config, const std::string& dir,
                                    std::ostream& log);

/// Renders curve_{metric}.svg under `dir` from metrics CSV files; one line
/// (mean +- standard error over seeds, smoothed per seed) per file and eval set.
void plot(const std::vector<std::string>& csv_paths, const std::vector<std::string>& metrics, int window,
          const std::string& dir);

} // namespace usf::cli
