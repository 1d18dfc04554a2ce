#include "bandit/env_model.hpp"

#include <algorithm>
#include <cmath>

namespace bandit {

void CovariateSpec::validate() const {
  if (dim < 2) throw ConfigError("covariates: dim must be >= 2 (intercept plus one feature)");
  if (kind == Kind::TruncatedNormal) {
    if (!(lower < upper)) throw ConfigError("covariates: lower must be < upper");
    if (!(scale > 0.0)) throw ConfigError("covariates: scale must be > 0");
  } else {
    if (support.empty()) throw ConfigError("covariates: discrete_uniform support is empty");
  }
}

double CovariateSpec::bound() const {
  if (kind == Kind::TruncatedNormal)
    return std::max({std::abs(lower), std::abs(upper), 1.0});
  double m = 1.0;
  for (double v : support) m = std::max(m, std::abs(v));
  return m;
}

void RewardSpec::validate(int dim) const {
  if (beta0.size() != dim || beta1.size() != dim)
    throw ConfigError("reward: beta length does not match covariate dim");
  if (sigma0 < 0.0 || sigma1 < 0.0) throw ConfigError("reward: sigma must be >= 0");
}

Vector sample_covariates(const CovariateSpec& spec, Rng& rng) {
  spec.validate();
  Vector x(spec.dim);
  x[0] = 1.0;
  if (spec.kind == CovariateSpec::Kind::TruncatedNormal) {
    for (int j = 1; j < spec.dim; ++j) {
      double v;
      do {
        v = spec.mean + spec.scale * rng.normal();
      } while (v < spec.lower || v > spec.upper);
      x[j] = v;
    }
  } else {
    const auto n = spec.support.size();
    for (int j = 1; j < spec.dim; ++j) {
      auto idx = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(n));
      if (idx >= n) idx = n - 1;
      x[j] = spec.support[idx];
    }
  }
  return x;
}

namespace {
double eval_phi(RewardSpec::Phi kind, const Vector& beta, const Vector& x) {
  if (beta.size() != x.size()) throw std::invalid_argument("mean_reward: dimension mismatch");
  const double s = beta.dot(x);
  switch (kind) {
    case RewardSpec::Phi::Linear: return s;
    case RewardSpec::Phi::Exponential: return std::exp(s);
    case RewardSpec::Phi::Logistic: return 1.0 / (1.0 + std::exp(-s));
  }
  throw std::logic_error("unreachable");
}
}  // namespace

double mean_reward(const RewardSpec& spec, const Vector& x, int arm) {
  // Arm isolation: arm 1 never reads phi0 and vice versa.
  return arm == 1 ? eval_phi(spec.phi1, spec.beta1, x) : eval_phi(spec.phi0, spec.beta0, x);
}

double draw_reward(const RewardSpec& spec, const Vector& x, int arm, Rng& rng) {
  const double sigma = arm == 1 ? spec.sigma1 : spec.sigma0;
  return mean_reward(spec, x, arm) + sigma * rng.normal();
}

}  // namespace bandit
