#pragma once

#include <vector>

#include "bandit/env_model.hpp"
#include "bandit/rng.hpp"

namespace bandit {

enum class EstimatorKind { OLS, WLS };

// Exploration-rate schedule, evaluated lazily per step and clamped to
// [floor, ceiling]. The raw curves log(t)/sqrt(t) and loglog(t)/sqrt(t)
// rise before their peak; we hold them flat at the peak value so the
// evaluated sequence is non-increasing for all t >= 2.
struct EpsilonSchedule {
  enum class Kind { Constant, Power, LogOverSqrt, LogLogOverSqrt };
  Kind kind = Kind::LogOverSqrt;
  double k = 0.1;       // scale (Constant uses k as the constant value)
  double alpha = 0.5;   // Power exponent: k * t^(-alpha)
  double floor = 0.0;
  double ceiling = 1.0;

  void validate() const;
  // Limit of the evaluated sequence as t -> infinity.
  double limit() const;
};

double epsilon_at(const EpsilonSchedule& schedule, int t);

// Eq. of the epsilon-greedy rule: (1-eps) I{s >= 0} + eps/2.
// The tie s == 0 selects arm 1.
double propensity(double beta_diff_dot_x, double eps);

// Bernoulli(pi); consumes exactly one uniform variate.
int draw_action(double pi, Rng& rng);

// Balanced warm-up: a uniformly random permutation of T0/2 zeros and
// T0/2 ones, fixed once per replication. Recorded propensity is 1/2.
std::vector<int> make_warmup_plan(int T0, Rng& rng);

struct PolicyConfig {
  EpsilonSchedule schedule;
  int T0 = 20;
  EstimatorKind estimator = EstimatorKind::OLS;

  void validate(int dim) const;
};

}  // namespace bandit
