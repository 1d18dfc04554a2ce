#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "bandit/env_model.hpp"
#include "bandit/estimators.hpp"
#include "bandit/policy.hpp"
#include "bandit/value.hpp"

namespace bandit {

struct ExperimentConfig {
  CovariateSpec cov;
  RewardSpec reward;
  PolicyConfig policy;
  int T = 2000;
  int reps = 1000;
  std::vector<int> checkpoints;  // empty -> default geometric grid
  std::uint64_t base_seed = 1;
  int mc_value_n = 10000;
  long oracle_n = 1000000;
  KernelConfig kernel;
  double ci_level = 0.95;
  int threads = 0;  // 0 -> hardware concurrency

  void validate() const;
  std::vector<int> effective_checkpoints() const;
};

// Everything recorded at one checkpoint of one replication.
struct CheckpointRecord {
  int rep = 0;
  int t = 0;
  double eps = 0.0;
  std::array<Vector, 2> beta;
  std::array<Vector, 2> se;
  double value_hat = 0.0;
  double value_se = 0.0;
  double aipw = 0.0;
  double policy_value = 0.0;  // common-draw E-value of the current policy
  double regret = 0.0;
  double regret_explore = 0.0;
  double regret_estimation = 0.0;
  Vector fprime;  // WLS runs only
};

struct ReplicationResult {
  std::vector<CheckpointRecord> records;
};

// Inference targets: true parameters for a linear model, least-false
// otherwise; value_target is V (or V*).
struct Targets {
  Vector beta0;
  Vector beta1;
  double value = 0.0;
  double value_mc_se = 0.0;
};

// Full online trajectory for one replication; deterministic in
// (cfg.base_seed, rep). value_draws, when present, holds one shared
// covariate draw matrix per checkpoint for the policy-value evaluation;
// targets supplies beta* for the misspecified-run reward-gap report.
ReplicationResult run_replication(const ExperimentConfig& cfg, int rep,
                                  const std::vector<Matrix>* value_draws,
                                  const Targets* targets);
ReplicationResult run_replication(const ExperimentConfig& cfg, int rep,
                                  const std::vector<Matrix>* value_draws = nullptr);

// Cumulative regret up to the end of the trajectory, split into the
// exploration part and the estimation-error part.
struct RegretCurves {
  double total = 0.0;
  double explore = 0.0;
  double estimation = 0.0;
};
RegretCurves regret_track(const std::vector<StepRecord>& traj, const Vector& true_beta_diff);

// Population-limit least squares of each arm's mean reward on x over n
// i.i.d. draws with fair-coin action routing.
std::pair<Vector, Vector> least_false_oracle(const ExperimentConfig& cfg, long n, Rng& rng);

Targets compute_targets(const ExperimentConfig& cfg);

struct CoordStat {
  double bias = 0.0;
  double mcsd = 0.0;
  double mean_se = 0.0;
  double ratio = 0.0;       // mean SE / MCSD
  bool ratio_valid = false;
  double coverage = 0.0;
  double coverage_se = 0.0; // binomial MC standard error
};

struct ValueStat {
  double bias = 0.0;
  double mcsd = 0.0;
  double mean_se = 0.0;
  double ratio = 0.0;
  bool ratio_valid = false;
  double coverage = 0.0;
  double coverage_se = 0.0;
  double mean_policy_value = 0.0;
  double mean_aipw = 0.0;
};

struct CheckpointSummary {
  int t = 0;
  std::array<std::vector<CoordStat>, 2> params;
  ValueStat value;
  double mean_regret = 0.0;
  double mean_regret_explore = 0.0;
  double mean_regret_estimation = 0.0;
  Vector mean_fprime;
};

struct AggregateReport {
  Targets targets;
  std::vector<CheckpointSummary> checkpoints;
  int reps = 0;
};

AggregateReport aggregate(const ExperimentConfig& cfg,
                          const std::vector<ReplicationResult>& results,
                          const Targets& targets);

// Shared per-checkpoint draw matrices for the policy-value evaluation.
std::vector<Matrix> make_value_draws(const ExperimentConfig& cfg);

// Runs all replications (optionally in parallel) and aggregates.
struct ExperimentOutput {
  std::vector<ReplicationResult> results;
  AggregateReport report;
};
ExperimentOutput run_experiment(const ExperimentConfig& cfg);

}  // namespace bandit
