#include "bandit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "bandit/mathutil.hpp"

namespace bandit {

void ExperimentConfig::validate() const {
  cov.validate();
  reward.validate(cov.dim);
  policy.validate(cov.dim);
  if (T < policy.T0) throw ConfigError("experiment: T must be >= T0");
  if (reps < 1) throw ConfigError("experiment: reps must be >= 1");
  if (mc_value_n < 1) throw ConfigError("experiment: mc_value_n must be >= 1");
  if (oracle_n < 1) throw ConfigError("experiment: oracle_n must be >= 1");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw ConfigError("experiment: ci_level outside (0,1)");
  const auto cps = effective_checkpoints();
  if (cps.empty()) throw ConfigError("experiment: no checkpoints inside [T0+1, T]");
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (cps[i] <= policy.T0 || cps[i] > T)
      throw ConfigError("experiment: checkpoint outside [T0+1, T]");
    if (i > 0 && cps[i] <= cps[i - 1]) throw ConfigError("experiment: checkpoints must be strictly increasing");
  }
}

std::vector<int> ExperimentConfig::effective_checkpoints() const {
  if (!checkpoints.empty()) return checkpoints;
  std::vector<int> grid = {25, 50, 100, 200, 400, 800, 1600};
  std::vector<int> out;
  for (int c : grid)
    if (c > policy.T0 && c < T) out.push_back(c);
  if (T > policy.T0) out.push_back(T);
  return out;
}

RegretCurves regret_track(const std::vector<StepRecord>& traj, const Vector& true_beta_diff) {
  RegretCurves r;
  for (const StepRecord& s : traj) {
    const double margin = true_beta_diff.dot(s.x);
    const double gap = std::abs(margin);
    const int oracle_arm = margin >= 0.0 ? 1 : 0;
    const int est_arm = s.beta_diff_dot_x >= 0.0 ? 1 : 0;
    if (s.a != oracle_arm) r.total += gap;
    if (s.a != est_arm) r.explore += gap;
    if (est_arm != oracle_arm) r.estimation += gap;
  }
  return r;
}

ReplicationResult run_replication(const ExperimentConfig& cfg, int rep,
                                  const std::vector<Matrix>* value_draws,
                                  const Targets* targets) {
  const int d = cfg.cov.dim;
  const int T0 = cfg.policy.T0;
  const bool wls = cfg.policy.estimator == EstimatorKind::WLS;
  const bool linear = cfg.reward.linear();
  const auto cps = cfg.effective_checkpoints();

  Rng rng = substream(cfg.base_seed, StreamTag::Replication, static_cast<std::uint64_t>(rep));
  const auto plan = make_warmup_plan(T0, rng);

  ArmEstimatorState arm0(0, d, wls);
  ArmEstimatorState arm1(1, d, wls);
  PooledState pooled(d);
  ValueState value;
  const Vector zero = Vector::Zero(d);

  ReplicationResult out;
  std::size_t next_cp = 0;

  for (int t = 1; t <= cfg.T; ++t) {
    const Vector x = sample_covariates(cfg.cov, rng);
    const bool est_ready = arm0.ready() && arm1.ready();

    double eps = 1.0, pi = 0.5, bdx = 0.0;
    const Vector* b0lag = &zero;
    const Vector* b1lag = &zero;
    int a;
    if (t <= T0) {
      a = plan[static_cast<std::size_t>(t - 1)];
    } else if (!est_ready) {
      // warm-up continuation: a not-ready arm forces pi = 1/2
      if (t > 4 * T0)
        throw std::runtime_error("run_replication: estimators not ready by t = 4*T0 (rep " +
                                 std::to_string(rep) + ")");
      a = draw_action(0.5, rng);
    } else {
      eps = epsilon_at(cfg.policy.schedule, t);
      b0lag = &arm0.beta_hat();
      b1lag = &arm1.beta_hat();
      bdx = (*b1lag - *b0lag).dot(x);
      pi = propensity(bdx, eps);
      a = draw_action(pi, rng);
    }
    const double y = draw_reward(cfg.reward, x, a, rng);

    Observation obs{t, x, a, pi, y, a == (bdx >= 0.0 ? 1 : 0)};
    StepRecord rec;
    rec.x = x;
    rec.a = a;
    rec.pi = pi;
    rec.y = y;
    rec.beta_diff_dot_x = bdx;
    rec.eps = eps;
    rec.match_prob = est_ready && t > T0 ? 1.0 - eps / 2.0 : 0.5;
    rec.warmup = !(est_ready && t > T0);
    rec.beta0_lag = *b0lag;
    rec.beta1_lag = *b1lag;

    (a == 1 ? arm1 : arm0).update(obs);
    pooled.update(x);
    value.add(std::move(rec));

    if (next_cp < cps.size() && t == cps[next_cp]) {
      if (!(arm0.ready() && arm1.ready()))
        throw std::runtime_error("run_replication: estimator not ready at checkpoint t=" +
                                 std::to_string(t));
      CheckpointRecord cr;
      cr.rep = rep;
      cr.t = t;
      cr.eps = epsilon_at(cfg.policy.schedule, t);
      cr.beta = {arm0.beta_hat(), arm1.beta_hat()};
      const double td = static_cast<double>(t);
      const double np = static_cast<double>(value.n_policy());
      if (wls) {
        const Matrix v0 = wls_sandwich_variance(arm0, pooled);
        const Matrix v1 = wls_sandwich_variance(arm1, pooled);
        cr.se = {(v0.diagonal() / td).cwiseSqrt(), (v1.diagonal() / td).cwiseSqrt()};
        const MisspecVariance mv = ipw_variance_misspec(value, arm0, arm1, pooled, cfg.kernel, cr.eps);
        cr.value_se = std::sqrt(mv.zeta2 / np);
        cr.fprime = mv.fprime;
      } else {
        const Matrix v0 = ols_variance(arm0, t);
        const Matrix v1 = ols_variance(arm1, t);
        cr.se = {(v0.diagonal() / td).cwiseSqrt(), (v1.diagonal() / td).cwiseSqrt()};
        cr.value_se = std::sqrt(ipw_variance_correct(value, cr.eps) / np);
      }
      cr.value_hat = value.value_hat();
      cr.aipw = aipw_value(value);
      if (value_draws && next_cp < value_draws->size())
        cr.policy_value = policy_value_on(cfg.reward, (*value_draws)[next_cp],
                                          arm1.beta_hat() - arm0.beta_hat(), cr.eps);
      if (linear) {
        const RegretCurves r = regret_track(value.trajectory(), cfg.reward.beta1 - cfg.reward.beta0);
        cr.regret = r.total;
        cr.regret_explore = r.explore;
        cr.regret_estimation = r.estimation;
      } else if (targets) {
        // raw mean-reward gap vs the beta*-policy
        const Vector bstar = targets->beta1 - targets->beta0;
        double gap = 0.0;
        for (const StepRecord& s : value.trajectory()) {
          const int star_arm = bstar.dot(s.x) >= 0.0 ? 1 : 0;
          gap += mean_reward(cfg.reward, s.x, star_arm) - mean_reward(cfg.reward, s.x, s.a);
        }
        cr.regret = gap;
      }
      out.records.push_back(std::move(cr));
      ++next_cp;
    }
  }
  return out;
}

ReplicationResult run_replication(const ExperimentConfig& cfg, int rep,
                                  const std::vector<Matrix>* value_draws) {
  return run_replication(cfg, rep, value_draws, nullptr);
}

std::pair<Vector, Vector> least_false_oracle(const ExperimentConfig& cfg, long n, Rng& rng) {
  const int d = cfg.cov.dim;
  Matrix gram0 = Matrix::Zero(d, d), gram1 = Matrix::Zero(d, d);
  Vector mom0 = Vector::Zero(d), mom1 = Vector::Zero(d);
  for (long i = 0; i < n; ++i) {
    const Vector x = sample_covariates(cfg.cov, rng);
    const int a = rng.bernoulli(0.5);
    const double y = draw_reward(cfg.reward, x, a, rng);
    if (a == 1) {
      gram1.selfadjointView<Eigen::Lower>().rankUpdate(x);
      mom1 += y * x;
    } else {
      gram0.selfadjointView<Eigen::Lower>().rankUpdate(x);
      mom0 += y * x;
    }
  }
  auto solve = [d](const Matrix& g, const Vector& m) {
    const Matrix full = Matrix(g.selfadjointView<Eigen::Lower>());
    Eigen::FullPivLU<Matrix> lu(full);
    if (!lu.isInvertible()) throw std::runtime_error("least_false_oracle: singular design");
    (void)d;
    return Vector(lu.solve(m));
  };
  return {solve(gram0, mom0), solve(gram1, mom1)};
}

Targets compute_targets(const ExperimentConfig& cfg) {
  Targets tg;
  if (cfg.reward.linear()) {
    tg.beta0 = cfg.reward.beta0;
    tg.beta1 = cfg.reward.beta1;
  } else {
    Rng rng = substream(cfg.base_seed, StreamTag::Oracle, 0);
    std::tie(tg.beta0, tg.beta1) = least_false_oracle(cfg, cfg.oracle_n, rng);
  }
  const Vector bdiff = tg.beta1 - tg.beta0;
  Rng vrng = substream(cfg.base_seed, StreamTag::Oracle, 1);
  double sum = 0.0, sq = 0.0;
  const long n = cfg.oracle_n;
  for (long i = 0; i < n; ++i) {
    const Vector x = sample_covariates(cfg.cov, vrng);
    const double v = mean_reward(cfg.reward, x, bdiff.dot(x) >= 0.0 ? 1 : 0);
    sum += v;
    sq += v * v;
  }
  tg.value = sum / static_cast<double>(n);
  const double var = sq / static_cast<double>(n) - tg.value * tg.value;
  tg.value_mc_se = std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
  return tg;
}

std::vector<Matrix> make_value_draws(const ExperimentConfig& cfg) {
  const auto cps = cfg.effective_checkpoints();
  std::vector<Matrix> out;
  out.reserve(cps.size());
  for (int cp : cps) {
    Rng rng = substream(cfg.base_seed, StreamTag::ValueDraws, static_cast<std::uint64_t>(cp));
    Matrix m(cfg.mc_value_n, cfg.cov.dim);
    for (int i = 0; i < cfg.mc_value_n; ++i) m.row(i) = sample_covariates(cfg.cov, rng);
    out.push_back(std::move(m));
  }
  return out;
}

namespace {

struct Moments {
  double mean = 0.0;
  double sd = 0.0;  // sample SD (n-1)
};

template <typename Get>
Moments moments_over(const std::vector<ReplicationResult>& results, std::size_t cp, Get get) {
  const auto n = static_cast<double>(results.size());
  double sum = 0.0;
  for (const auto& r : results) sum += get(r.records[cp]);
  const double mean = sum / n;
  double ss = 0.0;
  for (const auto& r : results) {
    const double dlt = get(r.records[cp]) - mean;
    ss += dlt * dlt;
  }
  return {mean, n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
}

}  // namespace

AggregateReport aggregate(const ExperimentConfig& cfg,
                          const std::vector<ReplicationResult>& results,
                          const Targets& targets) {
  if (results.size() < 1) throw std::invalid_argument("aggregate: no replications");
  const auto cps = cfg.effective_checkpoints();
  const int d = cfg.cov.dim;
  const double z = normal_quantile(0.5 * (1.0 + cfg.ci_level));
  const auto nreps = static_cast<double>(results.size());

  AggregateReport rep;
  rep.targets = targets;
  rep.reps = static_cast<int>(results.size());

  for (std::size_t cp = 0; cp < cps.size(); ++cp) {
    CheckpointSummary cs;
    cs.t = cps[cp];
    for (int arm = 0; arm < 2; ++arm) {
      const Vector& target = arm == 1 ? targets.beta1 : targets.beta0;
      auto& stats = cs.params[static_cast<std::size_t>(arm)];
      stats.resize(static_cast<std::size_t>(d));
      for (int j = 0; j < d; ++j) {
        auto est = [arm, j](const CheckpointRecord& r) { return r.beta[static_cast<std::size_t>(arm)][j]; };
        auto sej = [arm, j](const CheckpointRecord& r) { return r.se[static_cast<std::size_t>(arm)][j]; };
        const Moments m = moments_over(results, cp, est);
        const Moments s = moments_over(results, cp, sej);
        CoordStat& c = stats[static_cast<std::size_t>(j)];
        c.bias = m.mean - target[j];
        c.mcsd = m.sd;
        c.mean_se = s.mean;
        c.ratio_valid = m.sd > 0.0;
        c.ratio = c.ratio_valid ? s.mean / m.sd : 0.0;
        long covered = 0;
        for (const auto& r : results) {
          const auto& rec = r.records[cp];
          const double b = rec.beta[static_cast<std::size_t>(arm)][j];
          const double half = z * rec.se[static_cast<std::size_t>(arm)][j];
          if (b - half <= target[j] && target[j] <= b + half) ++covered;
        }
        c.coverage = static_cast<double>(covered) / nreps;
        c.coverage_se = std::sqrt(c.coverage * (1.0 - c.coverage) / nreps);
      }
    }
    {
      const Moments v = moments_over(results, cp, [](const CheckpointRecord& r) { return r.value_hat; });
      const Moments s = moments_over(results, cp, [](const CheckpointRecord& r) { return r.value_se; });
      ValueStat& vs = cs.value;
      vs.bias = v.mean - targets.value;
      vs.mcsd = v.sd;
      vs.mean_se = s.mean;
      vs.ratio_valid = v.sd > 0.0;
      vs.ratio = vs.ratio_valid ? s.mean / v.sd : 0.0;
      long covered = 0;
      for (const auto& r : results) {
        const auto& rec = r.records[cp];
        const double half = z * rec.value_se;
        if (rec.value_hat - half <= targets.value && targets.value <= rec.value_hat + half) ++covered;
      }
      vs.coverage = static_cast<double>(covered) / nreps;
      vs.coverage_se = std::sqrt(vs.coverage * (1.0 - vs.coverage) / nreps);
      vs.mean_policy_value = moments_over(results, cp, [](const CheckpointRecord& r) { return r.policy_value; }).mean;
      vs.mean_aipw = moments_over(results, cp, [](const CheckpointRecord& r) { return r.aipw; }).mean;
    }
    cs.mean_regret = moments_over(results, cp, [](const CheckpointRecord& r) { return r.regret; }).mean;
    cs.mean_regret_explore =
        moments_over(results, cp, [](const CheckpointRecord& r) { return r.regret_explore; }).mean;
    cs.mean_regret_estimation =
        moments_over(results, cp, [](const CheckpointRecord& r) { return r.regret_estimation; }).mean;
    if (results[0].records[cp].fprime.size() > 0) {
      Vector fsum = Vector::Zero(d);
      for (const auto& r : results) fsum += r.records[cp].fprime;
      cs.mean_fprime = fsum / nreps;
    }
    rep.checkpoints.push_back(std::move(cs));
  }
  return rep;
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto draws = make_value_draws(cfg);
  const Targets targets = compute_targets(cfg);

  ExperimentOutput out;
  out.results.resize(static_cast<std::size_t>(cfg.reps));

  int nthreads = cfg.threads > 0 ? cfg.threads
                                 : static_cast<int>(std::thread::hardware_concurrency());
  if (nthreads < 1) nthreads = 1;
  nthreads = std::min(nthreads, cfg.reps);

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string error_msg;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= cfg.reps || failed.load()) break;
      try {
        out.results[static_cast<std::size_t>(r)] = run_replication(cfg, r, &draws, &targets);
      } catch (const std::exception& e) {
        std::scoped_lock lk(err_mu);
        failed.store(true);
        if (error_msg.empty()) error_msg = e.what();
      }
    }
  };
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) throw std::runtime_error("run_experiment: " + error_msg);

  out.report = aggregate(cfg, out.results, targets);
  return out;
}

}  // namespace bandit
