#pragma once

#include <string>

#include "bandit/experiment.hpp"
#include "bandit/replay.hpp"

namespace bandit {

// Writes params.csv, value.csv, regret.csv, report.json and manifest.json
// into out_dir; returns the list of files written. Output is byte-stable:
// fixed row order and %.17g number formatting.
std::vector<std::string> write_experiment_outputs(const ExperimentConfig& cfg,
                                                  const ExperimentOutput& out,
                                                  const std::string& out_dir,
                                                  double wall_seconds);

void write_replay_report(const ReplayReport& report, const std::string& path);
void write_matched_trajectory(const std::vector<StepRecord>& traj, const std::string& path);

}  // namespace bandit
