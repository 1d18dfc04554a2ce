#include "bandit/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "bandit/config.hpp"
#include "bandit/mathutil.hpp"

namespace bandit {

namespace {

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : f_(std::fopen(path.c_str(), "wb")) {
    if (!f_) throw std::runtime_error("cannot open for writing: " + path);
  }
  ~CsvWriter() {
    if (f_) std::fclose(f_);
  }
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void raw(const char* s) { std::fputs(s, f_); }
  void num(double v) { std::fprintf(f_, "%.17g", v); }
  void field(double v) {
    num(v);
    std::fputc(',', f_);
  }
  void field(long v) { std::fprintf(f_, "%ld,", v); }
  void field(int v) { std::fprintf(f_, "%d,", v); }
  void end_row(double last) {
    num(last);
    std::fputc('\n', f_);
  }

 private:
  std::FILE* f_;
};

}  // namespace

std::vector<std::string> write_experiment_outputs(const ExperimentConfig& cfg,
                                                  const ExperimentOutput& out,
                                                  const std::string& out_dir,
                                                  double wall_seconds) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const double z = normal_quantile(0.5 * (1.0 + cfg.ci_level));
  std::vector<std::string> files;

  {
    const std::string path = (fs::path(out_dir) / "params.csv").string();
    CsvWriter w(path);
    w.raw("replication,t,arm,coord,estimate,se,ci_lo,ci_hi\n");
    for (const auto& res : out.results)
      for (const auto& rec : res.records)
        for (int arm = 0; arm < 2; ++arm)
          for (Eigen::Index j = 0; j < rec.beta[0].size(); ++j) {
            const double b = rec.beta[static_cast<std::size_t>(arm)][j];
            const double se = rec.se[static_cast<std::size_t>(arm)][j];
            w.field(rec.rep);
            w.field(rec.t);
            w.field(arm);
            w.field(static_cast<int>(j));
            w.field(b);
            w.field(se);
            w.field(b - z * se);
            w.end_row(b + z * se);
          }
    files.push_back(path);
  }
  {
    const std::string path = (fs::path(out_dir) / "value.csv").string();
    CsvWriter w(path);
    w.raw("replication,t,estimator,v_hat,se,ci_lo,ci_hi,aipw,policy_value\n");
    const char* est = cfg.policy.estimator == EstimatorKind::WLS ? "ipw_wls" : "ipw_ols";
    for (const auto& res : out.results)
      for (const auto& rec : res.records) {
        w.field(rec.rep);
        w.field(rec.t);
        std::string e(est);
        w.raw(e.c_str());
        w.raw(",");
        w.field(rec.value_hat);
        w.field(rec.value_se);
        w.field(rec.value_hat - z * rec.value_se);
        w.field(rec.value_hat + z * rec.value_se);
        w.field(rec.aipw);
        w.end_row(rec.policy_value);
      }
    files.push_back(path);
  }
  {
    const std::string path = (fs::path(out_dir) / "regret.csv").string();
    CsvWriter w(path);
    w.raw("replication,t,regret,regret_explore,regret_estimation\n");
    for (const auto& res : out.results)
      for (const auto& rec : res.records) {
        w.field(rec.rep);
        w.field(rec.t);
        w.field(rec.regret);
        w.field(rec.regret_explore);
        w.end_row(rec.regret_estimation);
      }
    files.push_back(path);
  }

  nlohmann::json report;
  report["config"] = config_to_json(cfg);
  report["config_hash"] = config_hash(cfg);
  report["targets"] = {{"beta0", std::vector<double>(out.report.targets.beta0.data(),
                                                     out.report.targets.beta0.data() + cfg.cov.dim)},
                       {"beta1", std::vector<double>(out.report.targets.beta1.data(),
                                                     out.report.targets.beta1.data() + cfg.cov.dim)},
                       {"value", out.report.targets.value},
                       {"value_mc_se", out.report.targets.value_mc_se}};
  report["reps"] = out.report.reps;
  report["common_value_draws"] = true;  // one draw set per checkpoint shared across reps
  nlohmann::json cps = nlohmann::json::array();
  for (const auto& cs : out.report.checkpoints) {
    nlohmann::json jcp;
    jcp["t"] = cs.t;
    for (int arm = 0; arm < 2; ++arm) {
      nlohmann::json coords = nlohmann::json::array();
      for (const auto& c : cs.params[static_cast<std::size_t>(arm)]) {
        nlohmann::json jc = {{"bias", c.bias},         {"mcsd", c.mcsd},
                             {"mean_se", c.mean_se},   {"coverage", c.coverage},
                             {"coverage_se", c.coverage_se}};
        if (c.ratio_valid) jc["se_mcsd_ratio"] = c.ratio;
        coords.push_back(jc);
      }
      jcp[arm == 0 ? "arm0" : "arm1"] = coords;
    }
    nlohmann::json jv = {{"bias", cs.value.bias},
                         {"mcsd", cs.value.mcsd},
                         {"mean_se", cs.value.mean_se},
                         {"coverage", cs.value.coverage},
                         {"coverage_se", cs.value.coverage_se},
                         {"mean_policy_value", cs.value.mean_policy_value},
                         {"mean_aipw", cs.value.mean_aipw}};
    if (cs.value.ratio_valid) jv["se_mcsd_ratio"] = cs.value.ratio;
    jcp["value"] = jv;
    jcp["regret"] = {{"total", cs.mean_regret},
                     {"explore", cs.mean_regret_explore},
                     {"estimation", cs.mean_regret_estimation}};
    if (cs.mean_fprime.size() > 0)
      jcp["mean_fprime"] =
          std::vector<double>(cs.mean_fprime.data(), cs.mean_fprime.data() + cs.mean_fprime.size());
    cps.push_back(jcp);
  }
  report["checkpoints"] = cps;
  {
    const std::string path = (std::filesystem::path(out_dir) / "report.json").string();
    std::ofstream f(path);
    f << report.dump(2) << "\n";
    files.push_back(path);
  }
  {
    nlohmann::json manifest = {{"tool_version", "0.1.0"},
                               {"config", config_to_json(cfg)},
                               {"config_hash", config_hash(cfg)},
                               {"wall_seconds", wall_seconds},
                               {"outputs", files}};
    const std::string path = (std::filesystem::path(out_dir) / "manifest.json").string();
    std::ofstream f(path);
    f << manifest.dump(2) << "\n";
    files.push_back(path);
  }
  return files;
}

void write_replay_report(const ReplayReport& report, const std::string& path) {
  nlohmann::json j = {{"n_total", report.n_total},
                      {"n_matched", report.n_matched},
                      {"matched_value_mean", report.matched_value_mean},
                      {"baseline_value_mean", report.baseline_value_mean},
                      {"ipw_optimal_value", report.ipw_optimal_value},
                      {"ipw_se", report.ipw_se},
                      {"ready", report.ready}};
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << j.dump(2) << "\n";
}

void write_matched_trajectory(const std::vector<StepRecord>& traj, const std::string& path) {
  CsvWriter w(path);
  w.raw("step,a,pi,y,match_prob,matched\n");
  long i = 0;
  for (const auto& s : traj) {
    w.field(++i);
    w.field(s.a);
    w.field(s.pi);
    w.field(s.y);
    w.field(s.match_prob);
    w.end_row(s.matched ? 1.0 : 0.0);
  }
}

}  // namespace bandit
