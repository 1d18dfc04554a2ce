#include "bandit/config.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

namespace bandit {

using nlohmann::json;

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw ConfigError("config field '" + field + "': " + why);
}

const json& require(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) bad_field(ctx + key, "missing");
  return j.at(key);
}

double get_num(const json& j, const std::string& key, const std::string& ctx) {
  const json& v = require(j, key, ctx);
  if (!v.is_number()) bad_field(ctx + key, "expected a number");
  return v.get<double>();
}

double get_num_or(const json& j, const std::string& key, double dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_number()) bad_field(key, "expected a number");
  return j.at(key).get<double>();
}

Vector get_vector(const json& j, const std::string& key, const std::string& ctx) {
  const json& v = require(j, key, ctx);
  if (!v.is_array() || v.empty()) bad_field(ctx + key, "expected a non-empty array");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) bad_field(ctx + key, "expected numeric entries");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

CovariateSpec parse_cov(const json& j) {
  CovariateSpec c;
  const std::string kind = require(j, "kind", "covariates.").get<std::string>();
  if (kind == "truncated_normal") {
    c.kind = CovariateSpec::Kind::TruncatedNormal;
    c.mean = get_num_or(j, "mean", 0.0);
    c.scale = get_num_or(j, "scale", 1.0);
    c.lower = get_num_or(j, "lower", -10.0);
    c.upper = get_num_or(j, "upper", 10.0);
  } else if (kind == "discrete_uniform") {
    c.kind = CovariateSpec::Kind::DiscreteUniform;
    const Vector s = get_vector(j, "support", "covariates.");
    c.support.assign(s.data(), s.data() + s.size());
  } else {
    bad_field("covariates.kind", "unknown kind '" + kind + "'");
  }
  c.dim = static_cast<int>(get_num(j, "dim", "covariates."));
  return c;
}

RewardSpec::Phi parse_phi_kind(const std::string& kind, const std::string& field) {
  if (kind == "linear") return RewardSpec::Phi::Linear;
  if (kind == "exponential") return RewardSpec::Phi::Exponential;
  if (kind == "logistic") return RewardSpec::Phi::Logistic;
  bad_field(field, "unknown kind '" + kind + "'");
}

RewardSpec parse_reward(const json& j) {
  RewardSpec r;
  const json& p0 = require(j, "phi0", "reward.");
  const json& p1 = require(j, "phi1", "reward.");
  r.phi0 = parse_phi_kind(require(p0, "kind", "reward.phi0.").get<std::string>(), "reward.phi0.kind");
  r.phi1 = parse_phi_kind(require(p1, "kind", "reward.phi1.").get<std::string>(), "reward.phi1.kind");
  r.beta0 = get_vector(p0, "beta", "reward.phi0.");
  r.beta1 = get_vector(p1, "beta", "reward.phi1.");
  r.sigma0 = get_num_or(j, "sigma0", 0.1);
  r.sigma1 = get_num_or(j, "sigma1", 0.1);
  return r;
}

EpsilonSchedule parse_epsilon(const json& j) {
  EpsilonSchedule s;
  const std::string kind = require(j, "kind", "epsilon.").get<std::string>();
  if (kind == "constant") s.kind = EpsilonSchedule::Kind::Constant;
  else if (kind == "power") s.kind = EpsilonSchedule::Kind::Power;
  else if (kind == "log_over_sqrt") s.kind = EpsilonSchedule::Kind::LogOverSqrt;
  else if (kind == "loglog_over_sqrt") s.kind = EpsilonSchedule::Kind::LogLogOverSqrt;
  else bad_field("epsilon.kind", "unknown kind '" + kind + "'");
  s.k = get_num(j, "k", "epsilon.");
  s.alpha = get_num_or(j, "alpha", 0.5);
  s.floor = get_num_or(j, "floor", 0.0);
  s.ceiling = get_num_or(j, "ceiling", 1.0);
  return s;
}

PolicyConfig parse_policy(const json& j) {
  PolicyConfig p;
  p.schedule = parse_epsilon(require(j, "epsilon", "policy."));
  p.T0 = static_cast<int>(get_num_or(j, "T0", 20));
  const std::string est = j.contains("estimator") ? j.at("estimator").get<std::string>() : "ols";
  if (est == "ols") p.estimator = EstimatorKind::OLS;
  else if (est == "wls") p.estimator = EstimatorKind::WLS;
  else bad_field("policy.estimator", "unknown kind '" + est + "'");
  return p;
}

KernelConfig parse_kernel(const json& j) {
  KernelConfig k;
  const std::string rule =
      j.contains("bandwidth_rule") ? j.at("bandwidth_rule").get<std::string>() : "sigma_t_cuberoot";
  if (rule == "sigma_t_cuberoot") k.rule = KernelConfig::Rule::SigmaTCubeRoot;
  else if (rule == "fixed") k.rule = KernelConfig::Rule::Fixed;
  else bad_field("kernel.bandwidth_rule", "unknown rule '" + rule + "'");
  k.fixed_h = get_num_or(j, "h", 0.1);
  k.min_bandwidth = get_num_or(j, "min_bandwidth", 1e-6);
  return k;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.cov = parse_cov(require(j, "covariates", ""));
  cfg.reward = parse_reward(require(j, "reward", ""));
  cfg.policy = parse_policy(require(j, "policy", ""));
  cfg.T = static_cast<int>(get_num(j, "T", ""));
  cfg.reps = static_cast<int>(get_num(j, "reps", ""));
  if (j.contains("checkpoints")) {
    const Vector c = get_vector(j, "checkpoints", "");
    cfg.checkpoints.assign(c.size(), 0);
    for (Eigen::Index i = 0; i < c.size(); ++i)
      cfg.checkpoints[static_cast<std::size_t>(i)] = static_cast<int>(c[i]);
  }
  cfg.base_seed = static_cast<std::uint64_t>(get_num_or(j, "base_seed", 1));
  cfg.mc_value_n = static_cast<int>(get_num_or(j, "mc_value_n", 10000));
  cfg.oracle_n = static_cast<long>(get_num_or(j, "oracle_n", 1000000));
  if (j.contains("kernel")) cfg.kernel = parse_kernel(j.at("kernel"));
  cfg.ci_level = get_num_or(j, "ci_level", 0.95);
  cfg.threads = static_cast<int>(get_num_or(j, "threads", 0));
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const ExperimentConfig& cfg) {
  json cov;
  if (cfg.cov.kind == CovariateSpec::Kind::TruncatedNormal) {
    cov = {{"kind", "truncated_normal"}, {"mean", cfg.cov.mean}, {"scale", cfg.cov.scale},
           {"lower", cfg.cov.lower}, {"upper", cfg.cov.upper}};
  } else {
    cov = {{"kind", "discrete_uniform"}, {"support", cfg.cov.support}};
  }
  cov["dim"] = cfg.cov.dim;

  auto phi_name = [](RewardSpec::Phi p) {
    switch (p) {
      case RewardSpec::Phi::Linear: return "linear";
      case RewardSpec::Phi::Exponential: return "exponential";
      case RewardSpec::Phi::Logistic: return "logistic";
    }
    return "linear";
  };
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };

  json reward = {{"phi0", {{"kind", phi_name(cfg.reward.phi0)}, {"beta", vec(cfg.reward.beta0)}}},
                 {"phi1", {{"kind", phi_name(cfg.reward.phi1)}, {"beta", vec(cfg.reward.beta1)}}},
                 {"sigma0", cfg.reward.sigma0},
                 {"sigma1", cfg.reward.sigma1}};

  const char* sk = "constant";
  switch (cfg.policy.schedule.kind) {
    case EpsilonSchedule::Kind::Constant: sk = "constant"; break;
    case EpsilonSchedule::Kind::Power: sk = "power"; break;
    case EpsilonSchedule::Kind::LogOverSqrt: sk = "log_over_sqrt"; break;
    case EpsilonSchedule::Kind::LogLogOverSqrt: sk = "loglog_over_sqrt"; break;
  }
  json policy = {{"epsilon",
                  {{"kind", sk}, {"k", cfg.policy.schedule.k}, {"alpha", cfg.policy.schedule.alpha},
                   {"floor", cfg.policy.schedule.floor}, {"ceiling", cfg.policy.schedule.ceiling}}},
                 {"T0", cfg.policy.T0},
                 {"estimator", cfg.policy.estimator == EstimatorKind::WLS ? "wls" : "ols"}};

  json kernel = {{"bandwidth_rule",
                  cfg.kernel.rule == KernelConfig::Rule::Fixed ? "fixed" : "sigma_t_cuberoot"},
                 {"h", cfg.kernel.fixed_h},
                 {"min_bandwidth", cfg.kernel.min_bandwidth}};

  return json{{"covariates", cov},
              {"reward", reward},
              {"policy", policy},
              {"T", cfg.T},
              {"reps", cfg.reps},
              {"checkpoints", cfg.effective_checkpoints()},
              {"base_seed", cfg.base_seed},
              {"mc_value_n", cfg.mc_value_n},
              {"oracle_n", cfg.oracle_n},
              {"kernel", kernel},
              {"ci_level", cfg.ci_level}};
  // threads is an execution knob, not an experiment parameter; outputs
  // must not depend on it, so it is excluded from the echo and the hash.
}

std::string config_hash(const ExperimentConfig& cfg) {
  // nlohmann objects are key-sorted, so dump() is canonical.
  const std::string s = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace bandit
