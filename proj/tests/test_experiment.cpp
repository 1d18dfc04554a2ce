#include <doctest.h>

#include <cmath>

#include "bandit/experiment.hpp"

using namespace bandit;

namespace {

Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

ExperimentConfig paper_linear(int T, int reps) {
  ExperimentConfig cfg;
  cfg.cov.dim = 3;
  cfg.reward.beta0 = vec3(0.3, -0.1, 0.7);
  cfg.reward.beta1 = vec3(0.8, 0.5, -0.4);
  cfg.reward.sigma0 = cfg.reward.sigma1 = 0.1;
  cfg.policy.schedule = {EpsilonSchedule::Kind::LogOverSqrt, 0.1};
  cfg.policy.T0 = 20;
  cfg.T = T;
  cfg.reps = reps;
  cfg.mc_value_n = 500;
  cfg.oracle_n = 20000;
  return cfg;
}

}  // namespace

TEST_CASE("effective_checkpoints") {
  auto cfg = paper_linear(2000, 1);
  CHECK(cfg.effective_checkpoints() == std::vector<int>{25, 50, 100, 200, 400, 800, 1600, 2000});
  cfg.T = 100;
  CHECK(cfg.effective_checkpoints() == std::vector<int>{25, 50, 100});
  cfg.T = 25;
  CHECK(cfg.effective_checkpoints() == std::vector<int>{25});
  cfg.checkpoints = {30, 60};
  CHECK(cfg.effective_checkpoints() == std::vector<int>{30, 60});
}

TEST_CASE("config validation") {
  auto cfg = paper_linear(200, 4);
  CHECK_NOTHROW(cfg.validate());
  SUBCASE("checkpoint inside warm-up") {
    cfg.checkpoints = {10, 50};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("checkpoint past T") {
    cfg.checkpoints = {50, 300};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("non-increasing checkpoints") {
    cfg.checkpoints = {50, 50};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("T below T0") {
    cfg.T = 10;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("bad ci level") {
    cfg.ci_level = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

TEST_CASE("run_replication is deterministic in (seed, rep)") {
  const auto cfg = paper_linear(120, 1);
  const auto a = run_replication(cfg, 3);
  const auto b = run_replication(cfg, 3);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].beta[0] == b.records[i].beta[0]);
    CHECK(a.records[i].beta[1] == b.records[i].beta[1]);
    CHECK(a.records[i].value_hat == b.records[i].value_hat);
    CHECK(a.records[i].value_se == b.records[i].value_se);
    CHECK(a.records[i].aipw == b.records[i].aipw);
  }
  const auto c = run_replication(cfg, 4);
  CHECK(a.records[0].beta[0] != c.records[0].beta[0]);
}

TEST_CASE("checkpoint records carry the schedule value and estimates converge") {
  auto cfg = paper_linear(800, 1);
  const auto res = run_replication(cfg, 0);
  REQUIRE(res.records.size() == cfg.effective_checkpoints().size());
  for (const auto& r : res.records) CHECK(r.eps == epsilon_at(cfg.policy.schedule, r.t));
  const auto& last = res.records.back();
  CHECK((last.beta[0] - cfg.reward.beta0).lpNorm<Eigen::Infinity>() < 0.1);
  CHECK((last.beta[1] - cfg.reward.beta1).lpNorm<Eigen::Infinity>() < 0.1);
  for (int arm = 0; arm < 2; ++arm)
    for (int j = 0; j < 3; ++j) CHECK(last.se[static_cast<std::size_t>(arm)][j] > 0.0);
}

TEST_CASE("regret_track fixture") {
  Vector diff(2);
  diff << 0.0, 1.0;
  std::vector<StepRecord> traj(2);
  traj[0].x = Vector(2);
  traj[0].x << 1.0, 2.0;  // oracle arm 1, gap 2
  traj[0].a = 0;
  traj[0].beta_diff_dot_x = -1.0;  // estimated arm 0: pure estimation error
  traj[1].x = Vector(2);
  traj[1].x << 1.0, -3.0;  // oracle arm 0, gap 3
  traj[1].a = 1;
  traj[1].beta_diff_dot_x = -0.5;  // estimated arm 0: pure exploration error
  const auto r = regret_track(traj, diff);
  CHECK(r.total == doctest::Approx(5.0));
  CHECK(r.explore == doctest::Approx(3.0));
  CHECK(r.estimation == doctest::Approx(2.0));
}

TEST_CASE("least_false_oracle recovers the truth for a linear model") {
  const auto cfg = paper_linear(100, 1);
  Rng rng(123);
  const auto [b0, b1] = least_false_oracle(cfg, 200000, rng);
  CHECK((b0 - cfg.reward.beta0).lpNorm<Eigen::Infinity>() < 0.02);
  CHECK((b1 - cfg.reward.beta1).lpNorm<Eigen::Infinity>() < 0.02);
}

TEST_CASE("compute_targets for the linear model") {
  auto cfg = paper_linear(100, 1);
  cfg.oracle_n = 200000;
  const Targets tg = compute_targets(cfg);
  CHECK(tg.beta0 == cfg.reward.beta0);
  CHECK(tg.beta1 == cfg.reward.beta1);
  // frozen Monte Carlo reference for V at the paper parameters
  CHECK(tg.value == doctest::Approx(1.0894).epsilon(0.01));
  CHECK(tg.value_mc_se > 0.0);
  CHECK(tg.value_mc_se < 0.01);
}

TEST_CASE("compute_targets differs from truth for a misspecified model") {
  auto cfg = paper_linear(100, 1);
  cfg.reward.phi0 = RewardSpec::Phi::Exponential;
  cfg.reward.phi1 = RewardSpec::Phi::Exponential;
  cfg.oracle_n = 300000;
  const Targets tg = compute_targets(cfg);
  // frozen least-false references for the exponential outcome model
  CHECK(tg.beta0[0] == doctest::Approx(1.7336).epsilon(0.03));
  CHECK(tg.beta1[0] == doctest::Approx(2.7323).epsilon(0.03));
  CHECK(tg.beta1[1] == doctest::Approx(1.3670).epsilon(0.05));
}

TEST_CASE("make_value_draws is per-checkpoint deterministic") {
  auto cfg = paper_linear(100, 1);
  cfg.checkpoints = {30, 60, 100};
  const auto a = make_value_draws(cfg);
  const auto b = make_value_draws(cfg);
  REQUIRE(a.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(a[static_cast<std::size_t>(i)].rows() == cfg.mc_value_n);
    CHECK(a[static_cast<std::size_t>(i)] == b[static_cast<std::size_t>(i)]);
  }
  CHECK(a[0] != a[1]);

  // dropping later checkpoints leaves earlier draw matrices unchanged
  auto cfg2 = cfg;
  cfg2.checkpoints = {30, 60};
  cfg2.T = 60;
  const auto c = make_value_draws(cfg2);
  CHECK(c[0] == a[0]);
  CHECK(c[1] == a[1]);
}

TEST_CASE("aggregate fixture") {
  ExperimentConfig cfg;
  cfg.cov.dim = 2;
  cfg.reward.beta0 = Vector::Zero(2);
  cfg.reward.beta1 = Vector::Zero(2);
  cfg.checkpoints = {25};

  Targets tg;
  tg.beta0 = Vector::Zero(2);
  tg.beta1 = Vector::Zero(2);
  tg.value = 0.0;

  auto make_rep = [](double b00, double se00, double vhat, double vse) {
    ReplicationResult r;
    CheckpointRecord c;
    c.t = 25;
    c.beta = {Vector::Zero(2), Vector::Zero(2)};
    c.se = {Vector::Zero(2), Vector::Zero(2)};
    c.beta[0][0] = b00;
    c.se[0][0] = se00;
    c.value_hat = vhat;
    c.value_se = vse;
    r.records.push_back(std::move(c));
    return r;
  };
  const std::vector<ReplicationResult> results = {make_rep(1.0, 1.0, 0.5, 1.0),
                                                  make_rep(-1.0, 0.1, 0.7, 0.1)};
  const auto rep = aggregate(cfg, results, tg);
  REQUIRE(rep.checkpoints.size() == 1);
  const auto& c0 = rep.checkpoints[0].params[0][0];
  CHECK(c0.bias == doctest::Approx(0.0));
  CHECK(c0.mcsd == doctest::Approx(std::sqrt(2.0)));
  CHECK(c0.mean_se == doctest::Approx(0.55));
  CHECK(c0.coverage == doctest::Approx(0.5));  // only the wide interval covers 0
  CHECK(c0.ratio == doctest::Approx(0.55 / std::sqrt(2.0)));

  const auto& vs = rep.checkpoints[0].value;
  CHECK(vs.bias == doctest::Approx(0.6));
  CHECK(vs.coverage == doctest::Approx(0.5));
}

TEST_CASE("run_experiment thread count does not change results") {
  auto cfg = paper_linear(150, 6);
  cfg.checkpoints = {50, 150};
  cfg.oracle_n = 5000;
  cfg.mc_value_n = 200;

  cfg.threads = 1;
  const auto seq = run_experiment(cfg);
  cfg.threads = 4;
  const auto par = run_experiment(cfg);

  REQUIRE(seq.results.size() == par.results.size());
  for (std::size_t r = 0; r < seq.results.size(); ++r) {
    const auto& a = seq.results[r].records;
    const auto& b = par.results[r].records;
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].beta[0] == b[i].beta[0]);
      CHECK(a[i].beta[1] == b[i].beta[1]);
      CHECK(a[i].value_hat == b[i].value_hat);
      CHECK(a[i].policy_value == b[i].policy_value);
      CHECK(a[i].regret == b[i].regret);
    }
  }
  CHECK(seq.report.reps == 6);
  CHECK(seq.report.checkpoints.size() == 2);
}
