#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "bandit/rng.hpp"

namespace bandit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Covariate sampler. The emitted vector always has x[0] = 1 (intercept);
// the remaining dim-1 coordinates are i.i.d. from the chosen distribution.
struct CovariateSpec {
  enum class Kind { TruncatedNormal, DiscreteUniform };
  Kind kind = Kind::TruncatedNormal;
  double mean = 0.0;
  double scale = 1.0;
  double lower = -10.0;
  double upper = 10.0;
  std::vector<double> support;  // DiscreteUniform only
  int dim = 3;                  // includes the intercept slot

  void validate() const;
  // sup-norm bound on emitted coordinates (>= 1 because of the intercept)
  double bound() const;
};

// Per-arm mean-reward functions and noise scales.
struct RewardSpec {
  enum class Phi { Linear, Exponential, Logistic };
  Phi phi0 = Phi::Linear;
  Phi phi1 = Phi::Linear;
  Vector beta0;
  Vector beta1;
  double sigma0 = 0.1;
  double sigma1 = 0.1;

  void validate(int dim) const;
  bool linear() const { return phi0 == Phi::Linear && phi1 == Phi::Linear; }
};

// One time step of an online trajectory.
struct Observation {
  int t = 0;
  Vector x;
  int a = 0;
  double pi = 0.5;  // propensity of a = 1 at decision time
  double y = 0.0;
  bool matched_optimal = false;
};

Vector sample_covariates(const CovariateSpec& spec, Rng& rng);
double mean_reward(const RewardSpec& spec, const Vector& x, int arm);
double draw_reward(const RewardSpec& spec, const Vector& x, int arm, Rng& rng);

}  // namespace bandit
