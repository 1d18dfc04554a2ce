#include "bandit/value.hpp"

#include <cmath>

#include "bandit/mathutil.hpp"

namespace bandit {

void ValueState::add(StepRecord rec) {
  if (!(rec.match_prob > 0.0))
    throw std::runtime_error("ValueState: zero match probability");
  const int greedy = rec.beta_diff_dot_x >= 0.0 ? 1 : 0;
  rec.matched = rec.a == greedy;
  if (!rec.warmup) {
    ++n_policy_;
    if (rec.matched) {
      ipw_sum_ += rec.y / rec.match_prob;
      ipw_sq_sum_ += rec.y * rec.y / rec.match_prob;
    }
  }
  ++t_;
  traj_.push_back(std::move(rec));
}

double optimal_value_mc(const RewardSpec& reward, const CovariateSpec& cov,
                        const Vector& beta_star_diff, int n, Rng& rng) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vector x = sample_covariates(cov, rng);
    const int arm = beta_star_diff.dot(x) >= 0.0 ? 1 : 0;
    sum += mean_reward(reward, x, arm);
  }
  return sum / n;
}

double policy_value_mc(const RewardSpec& reward, const CovariateSpec& cov,
                       const Vector& beta_diff_hat, double eps, int n, Rng& rng) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vector x = sample_covariates(cov, rng);
    const double pi = propensity(beta_diff_hat.dot(x), eps);
    sum += pi * mean_reward(reward, x, 1) + (1.0 - pi) * mean_reward(reward, x, 0);
  }
  return sum / n;
}

double policy_value_on(const RewardSpec& reward, const Matrix& draws,
                       const Vector& beta_diff_hat, double eps) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    const Vector x = draws.row(i);
    const double pi = propensity(beta_diff_hat.dot(x), eps);
    sum += pi * mean_reward(reward, x, 1) + (1.0 - pi) * mean_reward(reward, x, 0);
  }
  return sum / static_cast<double>(draws.rows());
}

double optimal_value_on(const RewardSpec& reward, const Matrix& draws,
                        const Vector& beta_star_diff) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    const Vector x = draws.row(i);
    sum += mean_reward(reward, x, beta_star_diff.dot(x) >= 0.0 ? 1 : 0);
  }
  return sum / static_cast<double>(draws.rows());
}

double ipw_variance_correct(const ValueState& state, double eps_t) {
  const double v = state.value_hat();
  const double z2 = 2.0 / (2.0 - eps_t) * state.ipw_sq_mean() - v * v;
  return z2 < 0.0 ? 0.0 : z2;
}

namespace {
// IPW pseudo-outcome: consistent for phi_1(x_s) - phi_0(x_s).
double pseudo_outcome(const StepRecord& r, const Vector& beta0_t, const Vector& beta1_t) {
  if (!(r.pi > 0.0) || !(r.pi < 1.0))
    throw std::runtime_error("pseudo_outcome: propensity at 0 or 1");
  const double u = r.y - (r.a == 1 ? beta1_t.dot(r.x) : beta0_t.dot(r.x));
  const double ipw = r.a == 1 ? 1.0 / r.pi : -1.0 / (1.0 - r.pi);
  return ipw * u + (beta1_t - beta0_t).dot(r.x);
}
}  // namespace

double empirical_f(const std::vector<StepRecord>& traj, const Vector& b,
                   const Vector& beta0_t, const Vector& beta1_t) {
  double sum = 0.0;
  for (const StepRecord& r : traj)
    if (b.dot(r.x) >= 0.0) sum += pseudo_outcome(r, beta0_t, beta1_t);
  return sum / static_cast<double>(traj.size());
}

double kernel_bandwidth(const std::vector<StepRecord>& traj, const Vector& beta_diff_t,
                        const KernelConfig& cfg) {
  double h;
  if (cfg.rule == KernelConfig::Rule::Fixed) {
    h = cfg.fixed_h;
  } else {
    const auto t = static_cast<double>(traj.size());
    double mean = 0.0, sq = 0.0;
    for (const StepRecord& r : traj) {
      const double s = beta_diff_t.dot(r.x);
      mean += s;
      sq += s * s;
    }
    mean /= t;
    const double var = sq / t - mean * mean;
    h = std::sqrt(var > 0.0 ? var : 0.0) * std::pow(t, -1.0 / 3.0);
  }
  h = std::max(h, cfg.min_bandwidth);
  if (!(h > 0.0) || std::isnan(h)) throw std::runtime_error("kernel_bandwidth: degenerate bandwidth");
  return h;
}

Vector kernel_fprime(const std::vector<StepRecord>& traj, const Vector& b,
                     const Vector& beta0_t, const Vector& beta1_t, const KernelConfig& cfg) {
  const double h = kernel_bandwidth(traj, beta1_t - beta0_t, cfg);
  Vector sum = Vector::Zero(b.size());
  for (const StepRecord& r : traj) {
    const double w = normal_pdf(b.dot(r.x) / h) / h;
    if (w == 0.0) continue;
    sum += w * pseudo_outcome(r, beta0_t, beta1_t) * r.x;
  }
  return sum / static_cast<double>(traj.size());
}

MisspecVariance ipw_variance_misspec(const ValueState& state,
                                     const ArmEstimatorState& arm0,
                                     const ArmEstimatorState& arm1,
                                     const PooledState& pooled,
                                     const KernelConfig& kcfg, double eps_t) {
  const auto& traj = state.trajectory();
  const double t = static_cast<double>(state.t());
  const Vector& b0 = arm0.beta_hat();
  const Vector& b1 = arm1.beta_hat();
  const Vector bdiff = b1 - b0;

  const Vector fp = kernel_fprime(traj, bdiff, b0, b1, kcfg);

  const Matrix sigma = pooled.sigma_hat();
  Eigen::FullPivLU<Matrix> lu(sigma);
  if (!lu.isInvertible()) throw std::runtime_error("ipw_variance_misspec: singular pooled gram");
  const Matrix sigma_inv = lu.inverse();

  const double v = state.value_hat();
  const double term1 = 2.0 / (2.0 - eps_t) * state.ipw_sq_mean() - v * v;

  const Matrix meat = wls_meat(arm0, pooled.t()) + wls_meat(arm1, pooled.t());
  const Vector si_fp = sigma_inv * fp;
  const double term2 = 2.0 * si_fp.dot(meat * si_fp);

  // Cross term: residuals against the *lagged* estimates in force at each step.
  Vector cross_sum = Vector::Zero(b0.size());
  for (const StepRecord& r : traj) {
    if (r.warmup || !r.matched) continue;
    if (r.beta0_lag.size() == 0 || r.beta1_lag.size() == 0)
      throw std::runtime_error("ipw_variance_misspec: trajectory lacks lagged estimates");
    const double resid = r.a == 1 ? r.y - r.beta1_lag.dot(r.x) : -(r.y - r.beta0_lag.dot(r.x));
    cross_sum += (r.y * resid / r.match_prob) * r.x;
  }
  const double n = state.n_policy() > 0 ? static_cast<double>(state.n_policy()) : t;
  const double term3 = 4.0 / (2.0 - eps_t) / n * fp.dot(sigma_inv * cross_sum);

  MisspecVariance out;
  out.fprime = fp;
  const double z2 = term1 + term2 + term3;
  out.floored = z2 < 0.0;
  out.zeta2 = out.floored ? 0.0 : z2;
  return out;
}

double aipw_value(const ValueState& state) {
  if (state.n_policy() == 0) return 0.0;
  double sum = 0.0;
  for (const StepRecord& r : state.trajectory()) {
    if (r.warmup) continue;
    if (r.beta0_lag.size() == 0 || r.beta1_lag.size() == 0)
      throw std::runtime_error("aipw_value: trajectory lacks lagged estimates");
    const double ind = r.matched ? 1.0 : 0.0;
    const double model = r.a == 1 ? r.beta1_lag.dot(r.x) : r.beta0_lag.dot(r.x);
    sum += ind / r.match_prob * r.y - (ind - r.match_prob) / r.match_prob * model;
  }
  return sum / static_cast<double>(state.n_policy());
}

}  // namespace bandit
