#pragma once

#include <fstream>
#include <string>

#include "bandit/env_model.hpp"
#include "bandit/estimators.hpp"
#include "bandit/policy.hpp"
#include "bandit/value.hpp"

namespace bandit {

// One row of a logged randomized dataset:
// covariates (intercept first), logged action, reward, logging propensity.
struct LoggedRecord {
  Vector x;
  int a_logged = 0;
  double y = 0.0;
  double p_logged = 0.5;
};

struct LogFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Streaming CSV reader for the schema  x1,...,xd,a,y,p  (header required).
// Validates each row and reports line numbers on errors.
class LogReader {
 public:
  explicit LogReader(const std::string& path);
  int dim() const { return dim_; }
  // Returns false at end of stream.
  bool next(LoggedRecord& out);

 private:
  std::ifstream in_;
  std::string path_;
  int dim_ = 0;
  long line_ = 1;
};

struct ReplayReport {
  long n_total = 0;
  long n_matched = 0;
  double matched_value_mean = 0.0;   // mean reward over accepted records
  double baseline_value_mean = 0.0;  // mean reward over all records
  double ipw_optimal_value = 0.0;    // V_hat on the matched subsequence
  double ipw_se = 0.0;
  bool ready = false;  // both arms reached an invertible design
};

// Rejection matching: draw the policy's action for each logged record and
// accept the record only when it matches the logged action. The accepted
// subsequence is fed through the same online machinery as a live run.
ReplayReport replay_run(LogReader& log, const PolicyConfig& policy, Rng& rng,
                        std::vector<StepRecord>* matched_out = nullptr);

// Uniform-logging synthetic stand-in for a clicks log. When binary_reward
// is set, rewards are Bernoulli(phi_a(x)) and every phi value must lie in
// [0,1].
void make_synthetic_log(const RewardSpec& reward, const CovariateSpec& cov, long n,
                        Rng& rng, const std::string& path, double p = 0.5,
                        bool binary_reward = false);

}  // namespace bandit
