#include "bandit/policy.hpp"

#include <algorithm>
#include <cmath>

namespace bandit {

namespace {

double raw_epsilon(const EpsilonSchedule& s, double t) {
  switch (s.kind) {
    case EpsilonSchedule::Kind::Constant: return s.k;
    case EpsilonSchedule::Kind::Power: return s.k * std::pow(t, -s.alpha);
    case EpsilonSchedule::Kind::LogOverSqrt: return s.k * std::log(t) / std::sqrt(t);
    case EpsilonSchedule::Kind::LogLogOverSqrt:
      return t > std::exp(1.0) ? s.k * std::log(std::log(t)) / std::sqrt(t) : 0.0;
  }
  throw std::logic_error("unreachable");
}

// Integer argmax of the raw curve over t >= 2; cached per kind.
int peak_time(const EpsilonSchedule& s) {
  if (s.kind == EpsilonSchedule::Kind::Constant || s.kind == EpsilonSchedule::Kind::Power) return 2;
  static const int log_peak = [] {
    EpsilonSchedule probe{EpsilonSchedule::Kind::LogOverSqrt, 1.0};
    int best = 2;
    for (int t = 2; t <= 200; ++t)
      if (raw_epsilon(probe, t) > raw_epsilon(probe, best)) best = t;
    return best;
  }();
  static const int loglog_peak = [] {
    EpsilonSchedule probe{EpsilonSchedule::Kind::LogLogOverSqrt, 1.0};
    int best = 2;
    for (int t = 2; t <= 200; ++t)
      if (raw_epsilon(probe, t) > raw_epsilon(probe, best)) best = t;
    return best;
  }();
  return s.kind == EpsilonSchedule::Kind::LogOverSqrt ? log_peak : loglog_peak;
}

}  // namespace

void EpsilonSchedule::validate() const {
  if (!(k >= 0.0)) throw ConfigError("epsilon: k must be >= 0");
  if (kind == Kind::Power && !(alpha >= 0.0)) throw ConfigError("epsilon: alpha must be >= 0");
  if (floor < 0.0 || floor > 1.0) throw ConfigError("epsilon: floor must be in [0,1]");
  if (!(ceiling > 0.0) || ceiling > 1.0) throw ConfigError("epsilon: ceiling must be in (0,1]");
  if (floor > ceiling) throw ConfigError("epsilon: floor must be <= ceiling");
}

double EpsilonSchedule::limit() const {
  const double raw = kind == Kind::Constant ? k : (kind == Kind::Power && alpha == 0.0 ? k : 0.0);
  return std::clamp(raw, floor, ceiling);
}

double epsilon_at(const EpsilonSchedule& schedule, int t) {
  if (t < 1) throw std::invalid_argument("epsilon_at: t must be >= 1");
  const int te = std::max(t, peak_time(schedule));
  return std::clamp(raw_epsilon(schedule, te), schedule.floor, schedule.ceiling);
}

double propensity(double beta_diff_dot_x, double eps) {
  if (std::isnan(beta_diff_dot_x) || std::isnan(eps))
    throw std::invalid_argument("propensity: NaN input");
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("propensity: eps outside [0,1]");
  return beta_diff_dot_x >= 0.0 ? (1.0 - eps) + eps / 2.0 : eps / 2.0;
}

int draw_action(double pi, Rng& rng) {
  if (pi < 0.0 || pi > 1.0) throw std::invalid_argument("draw_action: pi outside [0,1]");
  return rng.bernoulli(pi);
}

std::vector<int> make_warmup_plan(int T0, Rng& rng) {
  if (T0 < 2 || T0 % 2 != 0) throw ConfigError("policy: T0 must be a positive even integer");
  std::vector<int> plan(T0);
  std::fill(plan.begin() + T0 / 2, plan.end(), 1);
  // Fisher-Yates with our own stream so the draw count is fixed.
  for (int i = T0 - 1; i > 0; --i) {
    auto j = static_cast<int>(rng.uniform01() * (i + 1));
    if (j > i) j = i;
    std::swap(plan[i], plan[j]);
  }
  return plan;
}

void PolicyConfig::validate(int dim) const {
  schedule.validate();
  if (T0 < 2 * dim) throw ConfigError("policy: T0 must be >= 2*dim so each arm can get >= dim warm-up samples");
  if (T0 % 2 != 0) throw ConfigError("policy: T0 must be even");
  if (estimator == EstimatorKind::WLS && !(schedule.limit() > 0.0))
    throw ConfigError("policy: WLS requires an epsilon schedule bounded away from zero (set floor > 0 or a positive constant)");
}

}  // namespace bandit
