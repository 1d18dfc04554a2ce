#include <doctest.h>

#include <cmath>

#include "bandit/mathutil.hpp"
#include "bandit/value.hpp"

using namespace bandit;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}
Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

StepRecord step(Vector x, int a, double pi, double y, double bdx, double eps,
                double match_prob) {
  StepRecord r;
  r.x = std::move(x);
  r.a = a;
  r.pi = pi;
  r.y = y;
  r.beta_diff_dot_x = bdx;
  r.eps = eps;
  r.match_prob = match_prob;
  r.beta0_lag = Vector::Zero(r.x.size());
  r.beta1_lag = Vector::Zero(r.x.size());
  return r;
}

}  // namespace

TEST_CASE("ValueState accumulates matched IPW terms") {
  ValueState st;
  // tie in the score selects arm 1, so a = 1 matches
  st.add(step(vec2(1, 0), 1, 0.5, 2.0, 0.0, 1.0, 0.5));
  CHECK(st.trajectory().back().matched);
  CHECK(st.value_hat() == doctest::Approx(4.0));
  CHECK(st.ipw_sq_mean() == doctest::Approx(8.0));

  // greedy arm is 0 here, so a = 1 is a miss and contributes nothing
  st.add(step(vec2(1, 1), 1, 0.5, 10.0, -1.0, 1.0, 0.5));
  CHECK_FALSE(st.trajectory().back().matched);
  CHECK(st.t() == 2);
  CHECK(st.value_hat() == doctest::Approx(2.0));
  CHECK(st.ipw_sq_mean() == doctest::Approx(4.0));

  CHECK(ipw_variance_correct(st, 1.0) == doctest::Approx(2.0 * 4.0 - 4.0));
}

TEST_CASE("ValueState rejects zero match probability") {
  ValueState st;
  CHECK_THROWS(st.add(step(vec2(1, 0), 1, 0.5, 1.0, 0.0, 1.0, 0.0)));
}

TEST_CASE("ipw_variance_correct is never negative") {
  Rng rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    ValueState st;
    for (int i = 0; i < 50; ++i) {
      const double bdx = rng.uniform01() - 0.5;
      const double eps = 0.2;
      const int greedy = bdx >= 0.0 ? 1 : 0;
      const int a = rng.bernoulli(0.5);
      const double mp = a == greedy ? 1.0 - eps / 2.0 : eps / 2.0;
      st.add(step(vec2(1, rng.normal()), a, 0.5, rng.normal(), bdx, eps, mp));
    }
    CHECK(ipw_variance_correct(st, 0.2) >= 0.0);
  }
}

TEST_CASE("policy value with eps 0 at the true difference equals the optimal value") {
  RewardSpec r;
  r.beta0 = vec3(0.3, -0.1, 0.7);
  r.beta1 = vec3(0.8, 0.5, -0.4);
  CovariateSpec cov;
  cov.dim = 3;
  const Vector diff = r.beta1 - r.beta0;
  Rng a(55), b(55);
  const double opt = optimal_value_mc(r, cov, diff, 20000, a);
  const double pol = policy_value_mc(r, cov, diff, 0.0, 20000, b);
  CHECK(pol == doctest::Approx(opt));
}

TEST_CASE("policy_value_on matches policy_value_mc on the same draws") {
  RewardSpec r;
  r.beta0 = vec3(0.3, -0.1, 0.7);
  r.beta1 = vec3(0.8, 0.5, -0.4);
  r.phi1 = RewardSpec::Phi::Logistic;
  CovariateSpec cov;
  cov.dim = 3;
  const Vector diff = vec3(0.2, 0.4, -1.0);

  Rng a(77), b(77);
  Matrix draws(500, 3);
  for (int i = 0; i < 500; ++i) draws.row(i) = sample_covariates(cov, a);
  const double on = policy_value_on(r, draws, diff, 0.1);
  const double mc = policy_value_mc(r, cov, diff, 0.1, 500, b);
  CHECK(on == doctest::Approx(mc));

  const double opt_on = optimal_value_on(r, draws, diff);
  CHECK(opt_on >= on);  // the greedy rule dominates any eps-mixture of itself
}

TEST_CASE("empirical_f on noiseless correctly specified data") {
  Vector beta0 = vec2(0.5, -1.0), beta1 = vec2(1.0, 2.0);
  std::vector<StepRecord> traj;
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const Vector x = vec2(1.0, rng.normal());
    const int a = rng.bernoulli(0.5);
    const double y = (a == 1 ? beta1 : beta0).dot(x);  // residual term vanishes
    traj.push_back(step(x, a, 0.5, y, 0.0, 1.0, 0.5));
  }
  const Vector b = vec2(0.3, 1.0);
  double direct = 0.0;
  for (const auto& r : traj)
    if (b.dot(r.x) >= 0.0) direct += (beta1 - beta0).dot(r.x);
  direct /= static_cast<double>(traj.size());
  CHECK(empirical_f(traj, b, beta0, beta1) == doctest::Approx(direct).epsilon(1e-12));

  // a rule that never selects arm 1 has value difference 0
  CHECK(empirical_f(traj, vec2(-100.0, 0.0), beta0, beta1) == 0.0);
}

TEST_CASE("empirical_f rejects degenerate propensities") {
  std::vector<StepRecord> traj = {step(vec2(1, 0), 1, 1.0, 1.0, 0.0, 1.0, 0.5)};
  CHECK_THROWS(empirical_f(traj, vec2(1, 0), Vector::Zero(2), Vector::Zero(2)));
}

TEST_CASE("kernel_bandwidth rules") {
  std::vector<StepRecord> traj;
  Rng rng(13);
  for (int i = 0; i < 1000; ++i)
    traj.push_back(step(vec2(1.0, rng.normal()), 1, 0.5, 0.0, 0.0, 1.0, 0.5));

  KernelConfig fixed;
  fixed.rule = KernelConfig::Rule::Fixed;
  fixed.fixed_h = 0.25;
  CHECK(kernel_bandwidth(traj, vec2(0, 1), fixed) == doctest::Approx(0.25));
  fixed.fixed_h = 0.0;
  CHECK(kernel_bandwidth(traj, vec2(0, 1), fixed) == doctest::Approx(1e-6));

  KernelConfig adaptive;  // h = sd({b.x}) * t^{-1/3}
  const Vector bd = vec2(0.0, 2.0);
  double mean = 0.0, sq = 0.0;
  for (const auto& r : traj) {
    mean += bd.dot(r.x);
    sq += bd.dot(r.x) * bd.dot(r.x);
  }
  mean /= 1000.0;
  const double sd = std::sqrt(sq / 1000.0 - mean * mean);
  CHECK(kernel_bandwidth(traj, bd, adaptive) ==
        doctest::Approx(sd * std::pow(1000.0, -1.0 / 3.0)).epsilon(1e-12));

  // constant scores degenerate to the floor
  std::vector<StepRecord> flat(5, step(vec2(1, 0), 1, 0.5, 0.0, 0.0, 1.0, 0.5));
  CHECK(kernel_bandwidth(flat, vec2(1, 0), adaptive) == doctest::Approx(1e-6));
}

TEST_CASE("kernel_fprime single record fixture") {
  KernelConfig k;
  k.rule = KernelConfig::Rule::Fixed;
  k.fixed_h = 0.5;
  std::vector<StepRecord> traj = {step(vec2(1.0, 0.0), 1, 0.5, 1.0, 0.0, 1.0, 0.5)};
  // pseudo-outcome = y / pi = 2 with zero reference betas
  const Vector b = vec2(0.0, 1.0);  // b.x = 0 -> weight = pdf(0)/h
  const Vector got = kernel_fprime(traj, b, Vector::Zero(2), Vector::Zero(2), k);
  const double w = normal_pdf(0.0) / 0.5;
  CHECK(got[0] == doctest::Approx(w * 2.0));
  CHECK(got[1] == doctest::Approx(0.0));
}

TEST_CASE("kernel_fprime vanishes when pseudo-outcomes vanish") {
  Rng rng(21);
  const Vector beta = vec2(0.4, -0.3);
  std::vector<StepRecord> traj;
  for (int i = 0; i < 100; ++i) {
    const Vector x = vec2(1.0, rng.normal());
    const int a = rng.bernoulli(0.5);
    traj.push_back(step(x, a, 0.5, beta.dot(x), 0.0, 1.0, 0.5));
  }
  KernelConfig k;
  // same mean model for both arms and exact outcomes: every pseudo-outcome is 0
  const Vector got = kernel_fprime(traj, vec2(0.1, 1.0), beta, beta, k);
  CHECK(got.lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("kernel_fprime approximates the finite difference of the population value") {
  // smooth misspecified case: logistic outcomes, linear working model
  RewardSpec rs;
  rs.beta0 = vec3(0.3, -0.1, 0.7);
  rs.beta1 = vec3(0.8, 0.5, -0.4);
  rs.phi0 = RewardSpec::Phi::Logistic;
  rs.phi1 = RewardSpec::Phi::Logistic;
  CovariateSpec cov;
  cov.dim = 3;

  Rng rng(31);
  const Vector b0 = vec3(0.55, -0.02, 0.16);  // roughly least-false scale
  const Vector b1 = vec3(0.66, 0.11, -0.09);
  std::vector<StepRecord> traj;
  for (int i = 0; i < 40000; ++i) {
    const Vector x = sample_covariates(cov, rng);
    const int a = rng.bernoulli(0.5);
    const double y = draw_reward(rs, x, a, rng);
    traj.push_back(step(x, a, 0.5, y, 0.0, 1.0, 0.5));
  }
  KernelConfig k;
  const Vector bd = b1 - b0;
  const Vector fp = kernel_fprime(traj, bd, b0, b1, k);

  // central difference of the empirical f on the same trajectory
  const double delta = 0.05;
  for (int j = 0; j < 3; ++j) {
    Vector hi = bd, lo = bd;
    hi[j] += delta;
    lo[j] -= delta;
    const double fd =
        (empirical_f(traj, hi, b0, b1) - empirical_f(traj, lo, b0, b1)) / (2.0 * delta);
    CHECK(fp[j] == doctest::Approx(fd).epsilon(0.5).scale(0.05));
  }
}

TEST_CASE("aipw_value fixture") {
  ValueState st;
  auto r1 = step(vec2(1, 0), 1, 0.5, 2.0, 0.0, 0.5, 0.75);
  r1.beta1_lag = vec2(1.0, 0.0);  // model prediction 1
  st.add(r1);
  auto r2 = step(vec2(1, 0), 1, 0.5, 5.0, -1.0, 0.5, 0.25);  // miss
  r2.beta0_lag = vec2(3.0, 0.0);
  r2.beta1_lag = vec2(4.0, 0.0);  // a = 1, so model prediction is 4
  st.add(r2);
  // matched: y/P - (1-P)/P * model = 8/3 - 1/3 = 7/3; miss: 0 + model = 4
  CHECK(aipw_value(st) == doctest::Approx((7.0 / 3.0 + 4.0) / 2.0));
}

TEST_CASE("aipw with a zero model reduces to the IPW estimate") {
  Rng rng(41);
  ValueState st;
  for (int i = 0; i < 200; ++i) {
    const double bdx = rng.uniform01() - 0.5;
    const int greedy = bdx >= 0.0 ? 1 : 0;
    const int a = rng.bernoulli(0.5);
    const double mp = a == greedy ? 0.9 : 0.1;
    st.add(step(vec2(1, rng.normal()), a, 0.5, rng.normal(), bdx, 0.2, mp));
  }
  CHECK(aipw_value(st) == doctest::Approx(st.value_hat()).epsilon(1e-12));
}

TEST_CASE("ipw_variance_misspec structure") {
  Rng rng(61);
  const Vector beta0 = vec3(0.3, -0.1, 0.7);
  const Vector beta1 = vec3(0.8, 0.5, -0.4);
  ArmEstimatorState arm0(0, 3, true), arm1(1, 3, true);
  PooledState pooled(3);
  ValueState st;
  CovariateSpec cov;
  cov.dim = 3;
  const double eps = 0.2;
  for (int i = 1; i <= 500; ++i) {
    const Vector x = sample_covariates(cov, rng);
    pooled.update(x);
    const Vector b0 = arm0.ready() ? arm0.beta_hat() : Vector::Zero(3);
    const Vector b1 = arm1.ready() ? arm1.beta_hat() : Vector::Zero(3);
    const double bdx = (b1 - b0).dot(x);
    const double pi = propensity(bdx, eps);
    const int a = rng.bernoulli(pi);
    const double y = (a == 1 ? beta1 : beta0).dot(x) + 0.3 * rng.normal();
    Observation o{i, x, a, pi, y, false};
    if (a == 1)
      arm1.update(o);
    else
      arm0.update(o);
    const int greedy = bdx >= 0.0 ? 1 : 0;
    auto r = step(x, a, pi, y, bdx, eps, a == greedy ? 1.0 - eps / 2.0 : eps / 2.0);
    r.beta0_lag = b0;
    r.beta1_lag = b1;
    st.add(r);
  }
  arm0.refresh();
  arm1.refresh();
  REQUIRE(arm0.ready());
  REQUIRE(arm1.ready());

  KernelConfig k;
  const auto mv = ipw_variance_misspec(st, arm0, arm1, pooled, k, eps);
  CHECK(std::isfinite(mv.zeta2));
  CHECK(mv.zeta2 >= 0.0);
  CHECK(mv.fprime.size() == 3);
  const Vector direct = kernel_fprime(st.trajectory(), arm1.beta_hat() - arm0.beta_hat(),
                                      arm0.beta_hat(), arm1.beta_hat(), k);
  CHECK((mv.fprime - direct).lpNorm<Eigen::Infinity>() < 1e-14);

  // the correctly specified working model keeps zeta_tilde^2 near zeta_hat^2
  const double plain = ipw_variance_correct(st, eps);
  CHECK(mv.zeta2 == doctest::Approx(plain).epsilon(0.8));
}

TEST_CASE("ipw_variance_misspec with all-zero outcomes is zero") {
  Rng rng(71);
  ArmEstimatorState arm0(0, 2, true), arm1(1, 2, true);
  PooledState pooled(2);
  ValueState st;
  for (int i = 1; i <= 100; ++i) {
    const Vector x = vec2(1.0, rng.normal());
    pooled.update(x);
    const int a = rng.bernoulli(0.5);
    Observation o{i, x, a, 0.5, 0.0, false};
    if (a == 1)
      arm1.update(o);
    else
      arm0.update(o);
    auto r = step(x, a, 0.5, 0.0, 0.0, 1.0, 0.5);
    st.add(r);
  }
  arm0.refresh();
  arm1.refresh();
  KernelConfig k;
  const auto mv = ipw_variance_misspec(st, arm0, arm1, pooled, k, 1.0);
  CHECK(mv.zeta2 == doctest::Approx(0.0));
}
