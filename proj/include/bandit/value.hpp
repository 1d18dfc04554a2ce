#pragma once

#include <vector>

#include "bandit/env_model.hpp"
#include "bandit/estimators.hpp"
#include "bandit/policy.hpp"

namespace bandit {

// Bandwidth rule for the kernel derivative estimator.
struct KernelConfig {
  enum class Rule { SigmaTCubeRoot, Fixed };
  Rule rule = Rule::SigmaTCubeRoot;  // h_t = sigma_hat(t) * t^(-1/3)
  double fixed_h = 0.1;
  double min_bandwidth = 1e-6;
};

// One trajectory step as the retrospective value estimators need it:
// everything is recorded as of decision time, including the lagged
// per-arm estimates in force when the action was drawn.
struct StepRecord {
  Vector x;
  int a = 0;
  double pi = 0.5;            // P(a = 1) at decision time
  double y = 0.0;
  double beta_diff_dot_x = 0.0;  // (beta1 - beta0)_{s-1}^T x; 0 during warm-up
  double eps = 1.0;           // schedule value used (1 during warm-up)
  double match_prob = 0.5;    // P{a = estimated greedy arm}
  bool matched = false;
  bool warmup = false;        // forced-randomization step: no greedy estimate yet
  Vector beta0_lag;           // beta_{0,s-1}; zero during warm-up
  Vector beta1_lag;
};

// Running IPW sums plus the retained trajectory. The value sums run over
// policy steps only: the greedy arm is undefined while the estimates do
// not exist, so warm-up steps stay in the trajectory but out of V_hat.
class ValueState {
 public:
  void add(StepRecord rec);

  long t() const { return t_; }
  long n_policy() const { return n_policy_; }
  double value_hat() const {
    return n_policy_ > 0 ? ipw_sum_ / static_cast<double>(n_policy_) : 0.0;
  }
  double ipw_sq_mean() const {
    return n_policy_ > 0 ? ipw_sq_sum_ / static_cast<double>(n_policy_) : 0.0;
  }
  const std::vector<StepRecord>& trajectory() const { return traj_; }

 private:
  long t_ = 0;
  long n_policy_ = 0;
  double ipw_sum_ = 0.0;
  double ipw_sq_sum_ = 0.0;
  std::vector<StepRecord> traj_;
};

// Monte Carlo evaluation of the optimal value: the indicator uses
// beta_star_diff, the integrand the true mean-reward functions.
double optimal_value_mc(const RewardSpec& reward, const CovariateSpec& cov,
                        const Vector& beta_star_diff, int n, Rng& rng);

// Expected value of the epsilon-greedy policy built on beta_diff_hat,
// integrating the action out analytically per draw.
double policy_value_mc(const RewardSpec& reward, const CovariateSpec& cov,
                       const Vector& beta_diff_hat, double eps, int n, Rng& rng);

// Same, on a fixed draw set (rows = draws); used for the common-draw
// checkpoint evaluation.
double policy_value_on(const RewardSpec& reward, const Matrix& draws,
                       const Vector& beta_diff_hat, double eps);
double optimal_value_on(const RewardSpec& reward, const Matrix& draws,
                        const Vector& beta_star_diff);

// zeta_hat_t^2 of the correctly specified case; floored at 0.
double ipw_variance_correct(const ValueState& state, double eps_t);

// Empirical f(b) built from IPW pseudo-outcomes at the time-t estimates.
double empirical_f(const std::vector<StepRecord>& traj, const Vector& b,
                   const Vector& beta0_t, const Vector& beta1_t);

// Effective bandwidth for the kernel smoother at the time-t estimate.
double kernel_bandwidth(const std::vector<StepRecord>& traj, const Vector& beta_diff_t,
                        const KernelConfig& cfg);

// Kernel estimate of f'(b).
Vector kernel_fprime(const std::vector<StepRecord>& traj, const Vector& b,
                     const Vector& beta0_t, const Vector& beta1_t, const KernelConfig& cfg);

// zeta_tilde^2 of the misspecified case: the IPW second-moment term,
// the sandwich quadratic form in f', and the cross term built from the
// lagged per-step estimates. Floored at 0.
struct MisspecVariance {
  double zeta2 = 0.0;
  bool floored = false;
  Vector fprime;
};
MisspecVariance ipw_variance_misspec(const ValueState& state,
                                     const ArmEstimatorState& arm0,
                                     const ArmEstimatorState& arm1,
                                     const PooledState& pooled,
                                     const KernelConfig& kcfg, double eps_t);

// Augmented IPW point estimate (no variance; reported alongside V_hat).
double aipw_value(const ValueState& state);

}  // namespace bandit
