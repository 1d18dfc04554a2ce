#include "bandit/replay.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace bandit {

namespace {
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}
}  // namespace

LogReader::LogReader(const std::string& path) : in_(path), path_(path) {
  if (!in_) throw LogFormatError(path + ": cannot open");
  std::string header;
  if (!std::getline(in_, header)) throw LogFormatError(path + ": empty file");
  const auto fields = split_csv(header);
  if (fields.size() < 5 || fields[fields.size() - 3] != "a" || fields[fields.size() - 2] != "y" ||
      fields.back() != "p")
    throw LogFormatError(path + ": header must be x1,...,xd,a,y,p with d >= 2");
  dim_ = static_cast<int>(fields.size()) - 3;
}

bool LogReader::next(LoggedRecord& out) {
  std::string line;
  for (;;) {
    if (!std::getline(in_, line)) return false;
    ++line_;
    if (!line.empty()) break;
  }
  const auto fields = split_csv(line);
  const auto expect = static_cast<std::size_t>(dim_) + 3;
  auto fail = [&](const std::string& what) {
    throw LogFormatError(path_ + ":" + std::to_string(line_) + ": " + what);
  };
  if (fields.size() != expect) fail("expected " + std::to_string(expect) + " fields");
  out.x.resize(dim_);
  try {
    for (int j = 0; j < dim_; ++j) out.x[j] = std::stod(fields[static_cast<std::size_t>(j)]);
    const double a = std::stod(fields[static_cast<std::size_t>(dim_)]);
    if (a != 0.0 && a != 1.0) fail("action must be 0 or 1");
    out.a_logged = static_cast<int>(a);
    out.y = std::stod(fields[static_cast<std::size_t>(dim_) + 1]);
    out.p_logged = std::stod(fields[static_cast<std::size_t>(dim_) + 2]);
  } catch (const std::invalid_argument&) {
    fail("malformed numeric field");
  } catch (const std::out_of_range&) {
    fail("numeric field out of range");
  }
  if (!(out.p_logged > 0.0 && out.p_logged < 1.0)) fail("p must be in (0,1)");
  return true;
}

ReplayReport replay_run(LogReader& log, const PolicyConfig& policy, Rng& rng,
                        std::vector<StepRecord>* matched_out) {
  const int d = log.dim();
  policy.validate(d);
  const int T0 = policy.T0;
  const bool wls = policy.estimator == EstimatorKind::WLS;
  const auto plan = make_warmup_plan(T0, rng);

  ArmEstimatorState arm0(0, d, wls);
  ArmEstimatorState arm1(1, d, wls);
  ValueState value;
  const Vector zero = Vector::Zero(d);

  ReplayReport report;
  double y_all = 0.0, y_matched = 0.0;
  double last_eps = 1.0;

  LoggedRecord rec;
  while (log.next(rec)) {
    ++report.n_total;
    y_all += rec.y;

    const int t = static_cast<int>(report.n_matched) + 1;
    const bool est_ready = arm0.ready() && arm1.ready();
    double eps = 1.0, pi = 0.5, bdx = 0.0;
    const Vector* b0lag = &zero;
    const Vector* b1lag = &zero;
    int a;
    if (t <= T0) {
      a = plan[static_cast<std::size_t>(t - 1)];
    } else if (!est_ready) {
      a = draw_action(0.5, rng);
    } else {
      eps = epsilon_at(policy.schedule, t);
      b0lag = &arm0.beta_hat();
      b1lag = &arm1.beta_hat();
      bdx = (*b1lag - *b0lag).dot(rec.x);
      pi = propensity(bdx, eps);
      a = draw_action(pi, rng);
    }
    if (a != rec.a_logged) continue;  // reject: decision does not match the log

    ++report.n_matched;
    y_matched += rec.y;
    last_eps = est_ready && t > T0 ? eps : 1.0;

    Observation obs{t, rec.x, a, pi, rec.y, a == (bdx >= 0.0 ? 1 : 0)};
    (a == 1 ? arm1 : arm0).update(obs);

    StepRecord sr;
    sr.x = rec.x;
    sr.a = a;
    sr.pi = pi;
    sr.y = rec.y;
    sr.beta_diff_dot_x = bdx;
    sr.eps = last_eps;
    sr.match_prob = est_ready && t > T0 ? 1.0 - eps / 2.0 : 0.5;
    sr.warmup = !(est_ready && t > T0);
    sr.beta0_lag = *b0lag;
    sr.beta1_lag = *b1lag;
    value.add(std::move(sr));
    if (matched_out) matched_out->push_back(value.trajectory().back());
  }

  report.ready = arm0.ready() && arm1.ready();
  if (report.n_total > 0) report.baseline_value_mean = y_all / static_cast<double>(report.n_total);
  if (report.n_matched > 0)
    report.matched_value_mean = y_matched / static_cast<double>(report.n_matched);
  if (value.n_policy() > 0) {
    report.ipw_optimal_value = value.value_hat();
    report.ipw_se =
        std::sqrt(ipw_variance_correct(value, last_eps) / static_cast<double>(value.n_policy()));
  }
  return report;
}

void make_synthetic_log(const RewardSpec& reward, const CovariateSpec& cov, long n,
                        Rng& rng, const std::string& path, double p, bool binary_reward) {
  if (n < 1) throw ConfigError("make_synthetic_log: n must be >= 1");
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("make_synthetic_log: p must be in (0,1)");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("make_synthetic_log: cannot open " + path);
  for (int j = 1; j <= cov.dim; ++j) std::fprintf(f, "x%d,", j);
  std::fprintf(f, "a,y,p\n");
  for (long i = 0; i < n; ++i) {
    const Vector x = sample_covariates(cov, rng);
    const int a = rng.bernoulli(p);
    double y;
    if (binary_reward) {
      const double mu = mean_reward(reward, x, a);
      if (mu < 0.0 || mu > 1.0) {
        std::fclose(f);
        throw ConfigError("make_synthetic_log: mean reward outside [0,1] with binary rewards");
      }
      y = rng.bernoulli(mu);
    } else {
      y = draw_reward(reward, x, a, rng);
    }
    for (int j = 0; j < cov.dim; ++j) std::fprintf(f, "%.17g,", x[j]);
    std::fprintf(f, "%d,%.17g,%.17g\n", a, y, p);
  }
  std::fclose(f);
}

}  // namespace bandit
