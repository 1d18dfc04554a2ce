#pragma once

#include <optional>
#include <vector>

#include "bandit/env_model.hpp"
#include "bandit/policy.hpp"

namespace bandit {

// A row retained for the retrospective variance estimators.
// arm_propensity is P(a = this arm | x) at decision time.
struct ArmRow {
  Vector x;
  double y = 0.0;
  double arm_propensity = 0.5;
};

// Per-arm running (weighted) normal equations plus the retained rows.
// The incremental gram/moment sums are the semantic definition of the
// online OLS/WLS estimator; solve() refreshes beta_hat when the gram is
// numerically invertible.
class ArmEstimatorState {
 public:
  static constexpr double kConditionThreshold = 1e10;

  ArmEstimatorState(int arm, int dim, bool weighted)
      : arm_(arm), weighted_(weighted), gram_(Matrix::Zero(dim, dim)),
        moment_(Vector::Zero(dim)) {}

  void update(const Observation& obs);

  // gram^{-1} moment when the condition estimate passes; not-ready otherwise.
  std::optional<Vector> solve_beta() const;

  // Refresh and cache beta_hat; returns readiness.
  bool refresh();

  int arm() const { return arm_; }
  int dim() const { return static_cast<int>(gram_.rows()); }
  bool weighted() const { return weighted_; }
  bool ready() const { return ready_; }
  long count() const { return count_; }
  const Vector& beta_hat() const {
    if (!ready_) throw std::logic_error("ArmEstimatorState: not ready");
    return beta_hat_;
  }
  const Matrix& gram() const { return gram_; }
  const Vector& moment() const { return moment_; }
  const std::vector<ArmRow>& rows() const { return rows_; }

 private:
  int arm_;
  bool weighted_;
  Matrix gram_;
  Vector moment_;
  long count_ = 0;
  bool ready_ = false;
  Vector beta_hat_;
  std::vector<ArmRow> rows_;
};

// (1/t) sum_s x_s x_s^T over all steps, unweighted; the sandwich outer matrix.
class PooledState {
 public:
  explicit PooledState(int dim) : sum_(Matrix::Zero(dim, dim)) {}
  void update(const Vector& x) {
    sum_.selfadjointView<Eigen::Lower>().rankUpdate(x);
    ++t_;
  }
  long t() const { return t_; }
  Matrix sigma_hat() const {
    if (t_ == 0) throw std::logic_error("PooledState: empty");
    Matrix m = Matrix(sum_.selfadjointView<Eigen::Lower>());
    return m / static_cast<double>(t_);
  }

 private:
  Matrix sum_;
  long t_ = 0;
};

// Plug-in estimator of the OLS asymptotic covariance S_i:
//   (sum_i e_hat^2 / n_i) * ((1/t) sum_i x x^T)^{-1},
// residuals recomputed against the current beta_hat. SE = sqrt(diag/t).
Matrix ols_variance(const ArmEstimatorState& state, long t);

// Sandwich Sigma^{-1} H_i Sigma^{-1} with
//   H_i = (1/t) sum_i (1/p_s^2) x (y - x^T beta)^2 x^T.
Matrix wls_sandwich_variance(const ArmEstimatorState& state, const PooledState& pooled);

// H_i alone (reused by the misspecified value variance).
Matrix wls_meat(const ArmEstimatorState& state, long t);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return lo <= v && v <= hi; }
};

std::vector<Interval> wald_ci(const Vector& beta_hat, const Matrix& var, long t, double level);

// (beta1 - beta0, var0 + var1): the arm estimators are asymptotically
// uncorrelated, so the difference variance is the sum.
std::pair<Vector, Matrix> diff_inference(const Vector& beta0, const Vector& beta1,
                                         const Matrix& var0, const Matrix& var1);

// Inputs to the finite-sample tail bounds; population constants are
// user-supplied diagnostics, not estimated.
struct TailBoundInputs {
  double t = 0;
  double eps_t = 0;
  double d = 0;
  double sigma = 0;
  double L_x = 0;
  double lambda = 0;
  double kappa = 0;
  double L_phi = 0;  // WLS bound only
};

// Right-hand side of the four-term OLS tail bound, clamped to [0,1].
double ols_tail_bound(const TailBoundInputs& in);
// Six-term WLS bound, clamped to [0,1].
double wls_tail_bound(const TailBoundInputs& in);

}  // namespace bandit
