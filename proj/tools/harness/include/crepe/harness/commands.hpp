#pragma once

#include <ostream>
#include <string>

#include "crepe/harness/formats.hpp"
#include "crepe/harness/run_config.hpp"

namespace crepe::harness {

// Outcome of a subcommand. `pass` maps to exit code 0, otherwise 1.
struct CommandResult {
    bool pass = true;
    std::string message;
};

// Writes coeffs.bin (CPE1) and coeffs.json.
CommandResult cmd_coeffs(const RunConfig& config);
// Writes trace_path.csv.
CommandResult cmd_trace_path(const RunConfig& config);
// Writes oracle_report.json and oracle_configs.csv.
CommandResult cmd_oracle_check(const RunConfig& config);
// Writes gradcheck.json.
CommandResult cmd_gradcheck(const RunConfig& config);
// Writes train_head.csv, train_curve.csv and train_head.json.
CommandResult cmd_train_head(const RunConfig& config);
// Writes mix_sim.csv and mix_sim.json.
CommandResult cmd_mix_sim(const RunConfig& config);

// Trajectory from config.trajectory_path, or synthesized from config.trajectory_spec.
Trajectory load_trajectory(const RunConfig& config);

// Per (frame, token) intervals: config override, else RDM1 teacher intervals over a head at
// init, else the head at init (mu = 0, sigma = 3).
std::vector<RadialInterval> token_intervals(const RunConfig& config, const Trajectory& trajectory);

std::string format_double(double v);

}  // namespace crepe::harness
