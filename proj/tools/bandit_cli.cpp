#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bandit/config.hpp"
#include "bandit/io.hpp"
#include "bandit/replay.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int env_default_threads() {
  if (const char* v = std::getenv("BANDIT_THREADS")) return std::atoi(v);
  return 0;
}

bandit::ExperimentConfig load_with_overrides(const std::string& path, int reps_override,
                                             int T_override, std::uint64_t seed_override,
                                             bool seed_set, int threads) {
  bandit::ExperimentConfig cfg = bandit::load_config(path);
  if (reps_override > 0) cfg.reps = reps_override;
  if (T_override > 0) cfg.T = T_override;
  if (seed_set) cfg.base_seed = seed_override;
  cfg.threads = threads;
  cfg.validate();
  return cfg;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, int reps, int T,
                 std::uint64_t seed, bool seed_set, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load_with_overrides(config_path, reps, T, seed, seed_set, threads);
  const auto out = bandit::run_experiment(cfg);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto files = bandit::write_experiment_outputs(cfg, out, out_dir, wall);
  for (const auto& f : files) std::cout << "wrote " << f << "\n";
  return 0;
}

int cmd_oracle(const std::string& config_path, const std::string& cache_path) {
  auto cfg = bandit::load_config(config_path);
  const bandit::Targets tg = bandit::compute_targets(cfg);
  nlohmann::json j = {
      {"beta0_star", std::vector<double>(tg.beta0.data(), tg.beta0.data() + tg.beta0.size())},
      {"beta1_star", std::vector<double>(tg.beta1.data(), tg.beta1.data() + tg.beta1.size())},
      {"value", tg.value},
      {"value_mc_se", tg.value_mc_se},
      {"oracle_n", cfg.oracle_n},
      {"config_hash", bandit::config_hash(cfg)}};
  std::cout << j.dump(2) << "\n";
  if (!cache_path.empty()) {
    std::ofstream f(cache_path);
    if (!f) throw std::runtime_error("cannot open oracle cache for writing: " + cache_path);
    f << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_replay(const std::string& log_path, const std::string& config_path,
               const std::string& out_dir, long make_synthetic_n) {
  const auto cfg = bandit::load_config(config_path);
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::string effective_log = log_path;
  if (make_synthetic_n > 0) {
    effective_log = (fs::path(out_dir) / "synthetic_log.csv").string();
    auto rng = bandit::substream(cfg.base_seed, bandit::StreamTag::SyntheticLog);
    const bool binary = cfg.reward.phi0 == bandit::RewardSpec::Phi::Logistic &&
                        cfg.reward.phi1 == bandit::RewardSpec::Phi::Logistic;
    bandit::make_synthetic_log(cfg.reward, cfg.cov, make_synthetic_n, rng, effective_log, 0.5,
                               binary);
    std::cout << "wrote " << effective_log << "\n";
  }

  bandit::LogReader reader(effective_log);
  auto rng = bandit::substream(cfg.base_seed, bandit::StreamTag::Replay);
  std::vector<bandit::StepRecord> matched;
  const bandit::ReplayReport report = bandit::replay_run(reader, cfg.policy, rng, &matched);

  const std::string report_path = (fs::path(out_dir) / "replay_report.json").string();
  bandit::write_replay_report(report, report_path);
  const std::string traj_path = (fs::path(out_dir) / "matched_trajectory.csv").string();
  bandit::write_matched_trajectory(matched, traj_path);
  std::cout << "wrote " << report_path << "\nwrote " << traj_path << "\n";
  std::cout << "matched " << report.n_matched << "/" << report.n_total
            << "  matched mean " << report.matched_value_mean << "  baseline mean "
            << report.baseline_value_mean << "  ipw optimal " << report.ipw_optimal_value
            << " (se " << report.ipw_se << ")\n";
  return 0;
}

int cmd_report(const std::string& dir) {
  namespace fs = std::filesystem;
  const std::string path = (fs::path(dir) / "report.json").string();
  std::ifstream f(path);
  if (!f) throw bandit::ConfigError("no report.json in " + dir);
  nlohmann::json j;
  f >> j;
  // round-trip the echoed config through the loader as a consistency check
  const auto cfg = bandit::config_from_json(j.at("config"));
  std::cout << "config hash " << j.at("config_hash").get<std::string>() << ", reps "
            << j.at("reps").get<int>() << ", T " << cfg.T << "\n";
  for (const auto& cp : j.at("checkpoints")) {
    const auto& v = cp.at("value");
    std::cout << "t=" << cp.at("t").get<int>() << "  value bias " << v.at("bias").get<double>()
              << "  coverage " << v.at("coverage").get<double>() << "  regret "
              << cp.at("regret").at("total").get<double>() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"epsilon-greedy contextual bandit: simulation, inference, and replay"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", log_path, oracle_cache, report_dir = "out";
  int reps = 0, T = 0, threads = env_default_threads();
  std::uint64_t seed = 0;
  long make_synth = 0;

  auto* sim = app.add_subcommand("simulate", "run the Monte Carlo experiment harness");
  sim->add_option("config", config_path, "JSON experiment config")->required();
  sim->add_option("-o,--out", out_dir, "output directory");
  sim->add_option("--reps", reps, "override replication count");
  sim->add_option("--T", T, "override horizon");
  auto* seed_opt = sim->add_option("--seed", seed, "override base seed");
  sim->add_option("--threads", threads, "replication parallelism (0 = auto)");

  auto* orc = app.add_subcommand("oracle", "compute least-false parameters and optimal value");
  orc->add_option("config", config_path, "JSON experiment config")->required();
  orc->add_option("--cache", oracle_cache, "write oracle JSON here for reuse");

  auto* rep = app.add_subcommand("replay", "offline evaluation on a logged randomized dataset");
  rep->add_option("config", config_path, "JSON experiment config")->required();
  rep->add_option("--log", log_path, "logged data CSV (x1..xd,a,y,p)");
  rep->add_option("-o,--out", out_dir, "output directory");
  rep->add_option("--make-synthetic", make_synth, "generate a synthetic log of this many rows first");

  auto* rpt = app.add_subcommand("report", "re-summarize an existing output directory");
  rpt->add_option("dir", report_dir, "output directory holding report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(config_path, out_dir, reps, T, seed, !seed_opt->empty(), threads);
    if (orc->parsed()) return cmd_oracle(config_path, oracle_cache);
    if (rep->parsed()) {
      if (log_path.empty() && make_synth <= 0)
        throw bandit::ConfigError("replay: provide --log or --make-synthetic");
      return cmd_replay(log_path, config_path, out_dir, make_synth);
    }
    if (rpt->parsed()) return cmd_report(report_dir);
  } catch (const bandit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const bandit::LogFormatError& e) {
    std::cerr << "log error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
