#include "bandit/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "bandit/mathutil.hpp"

namespace bandit {

void ArmEstimatorState::update(const Observation& obs) {
  if (obs.a != arm_) throw std::invalid_argument("ArmEstimatorState: observation routed to wrong arm");
  const double p = arm_ == 1 ? obs.pi : 1.0 - obs.pi;
  double w = 1.0;
  if (weighted_) {
    if (!(p > 0.0) || !(p < 1.0))
      throw std::runtime_error("ArmEstimatorState: degenerate WLS weight, propensity at 0 or 1");
    w = 1.0 / p;
  }
  gram_.selfadjointView<Eigen::Lower>().rankUpdate(obs.x, w);
  moment_ += w * obs.y * obs.x;
  ++count_;
  rows_.push_back({obs.x, obs.y, p});
  refresh();
}

std::optional<Vector> ArmEstimatorState::solve_beta() const {
  if (count_ < dim()) return std::nullopt;
  const Matrix g = Matrix(gram_.selfadjointView<Eigen::Lower>());
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kConditionThreshold) return std::nullopt;
  return g.ldlt().solve(moment_).eval();
}

bool ArmEstimatorState::refresh() {
  if (auto b = solve_beta()) {
    beta_hat_ = std::move(*b);
    ready_ = true;
  } else {
    ready_ = false;
  }
  return ready_;
}

Matrix ols_variance(const ArmEstimatorState& state, long t) {
  if (!state.ready()) throw std::logic_error("ols_variance: estimator not ready");
  if (state.weighted()) throw std::logic_error("ols_variance: state is WLS-weighted");
  const Vector& beta = state.beta_hat();
  double rss = 0.0;
  for (const ArmRow& r : state.rows()) {
    const double e = r.y - beta.dot(r.x);
    rss += e * e;
  }
  const double sigma2 = rss / static_cast<double>(state.count());
  const Matrix g = Matrix(state.gram().selfadjointView<Eigen::Lower>()) / static_cast<double>(t);
  return sigma2 * g.inverse();
}

Matrix wls_meat(const ArmEstimatorState& state, long t) {
  if (!state.ready()) throw std::logic_error("wls_meat: estimator not ready");
  const Vector& beta = state.beta_hat();
  Matrix h = Matrix::Zero(state.dim(), state.dim());
  for (const ArmRow& r : state.rows()) {
    const double e = r.y - beta.dot(r.x);
    h.selfadjointView<Eigen::Lower>().rankUpdate(r.x, e * e / (r.arm_propensity * r.arm_propensity));
  }
  return Matrix(h.selfadjointView<Eigen::Lower>()) / static_cast<double>(t);
}

Matrix wls_sandwich_variance(const ArmEstimatorState& state, const PooledState& pooled) {
  const Matrix sigma = pooled.sigma_hat();
  Eigen::FullPivLU<Matrix> lu(sigma);
  if (!lu.isInvertible()) throw std::runtime_error("wls_sandwich_variance: singular pooled gram");
  const Matrix sigma_inv = lu.inverse();
  const Matrix h = wls_meat(state, pooled.t());
  return sigma_inv * h * sigma_inv;
}

std::vector<Interval> wald_ci(const Vector& beta_hat, const Matrix& var, long t, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("wald_ci: level outside (0,1)");
  const double z = normal_quantile(0.5 * (1.0 + level));
  std::vector<Interval> out(static_cast<std::size_t>(beta_hat.size()));
  for (Eigen::Index j = 0; j < beta_hat.size(); ++j) {
    const double v = var(j, j);
    if (v < 0.0) throw std::runtime_error("wald_ci: negative variance diagonal");
    const double half = z * std::sqrt(v / static_cast<double>(t));
    out[static_cast<std::size_t>(j)] = {beta_hat[j] - half, beta_hat[j] + half};
  }
  return out;
}

std::pair<Vector, Matrix> diff_inference(const Vector& beta0, const Vector& beta1,
                                         const Matrix& var0, const Matrix& var1) {
  return {beta1 - beta0, var0 + var1};
}

namespace {
double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }
}  // namespace

double ols_tail_bound(const TailBoundInputs& in) {
  const double t = in.t, eps = in.eps_t, d = in.d, s2 = in.sigma * in.sigma;
  const double Lx2 = in.L_x * in.L_x, lam = in.lambda, kap = in.kappa;
  const double denom = 128.0 * d * d * s2 * Lx2;
  const double core = t * eps * eps * lam * lam * kap * kap;
  const double rhs = 1.0 - std::exp(-t * eps / 8.0)
                   - d * std::exp(-t * eps * lam / (32.0 * Lx2))
                   - 2.0 * d * std::exp(-core / denom)
                   + 2.0 * d * d * std::exp(-(core + 4.0 * t * eps * lam * d * d * s2) / denom);
  return clamp01(rhs);
}

double wls_tail_bound(const TailBoundInputs& in) {
  const double t = in.t, eps = in.eps_t, d = in.d, s2 = in.sigma * in.sigma;
  const double Lx2 = in.L_x * in.L_x, lam = in.lambda, kap = in.kappa;
  const double Lp2 = in.L_phi * in.L_phi;
  const double denom_phi = 512.0 * d * d * Lx2 * Lp2;
  const double denom_sig = 512.0 * d * d * s2 * Lx2;
  const double core_phi = t * std::pow(eps, 4) * lam * lam * kap * kap;
  const double core_sig = t * eps * eps * lam * lam * kap * kap;
  const double rhs = 1.0 - std::exp(-t * eps / 8.0)
                   - d * std::exp(-t * eps * lam / (32.0 * Lx2))
                   - 2.0 * d * std::exp(-core_phi / denom_phi)
                   - 2.0 * d * std::exp(-core_sig / denom_sig)
                   + 2.0 * d * d * std::exp(-(core_phi + 8.0 * t * eps * lam * d * d * Lp2) / denom_phi)
                   + 2.0 * d * d * std::exp(-(core_sig + 8.0 * t * eps * lam * d * d * s2) / denom_sig);
  return clamp01(rhs);
}

}  // namespace bandit
