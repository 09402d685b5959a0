#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "epw/errors.hpp"
#include "epw/experiment.hpp"
#include "epw/instance_io.hpp"
#include "epw/oracle.hpp"
#include "epw/policy_io.hpp"
#include "epw/sample_size.hpp"

namespace {

using namespace epw;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRefusal = 3;
constexpr int kExitConsistency = 4;

struct CommonOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> repeats;
  std::optional<std::uint64_t> n_override;
  std::optional<std::string> out;
  std::optional<std::uint64_t> cap_n;
  std::optional<int> jobs;
};

ExperimentConfig load_with_overrides(const CommonOverrides& ov) {
  ExperimentConfig cfg = load_experiment_config(ov.config_path);
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.repeats) cfg.repeats = *ov.repeats;
  if (ov.n_override) cfg.n_override = *ov.n_override;
  if (ov.out) cfg.out_dir = *ov.out;
  if (ov.cap_n) cfg.cap_n = *ov.cap_n;
  if (ov.jobs) cfg.jobs = *ov.jobs;
  return cfg;
}

EnvironmentSpec env_spec_from_flags(const std::string& config_path,
                                    const std::string& instance_path,
                                    bool hide_enum) {
  EnvironmentSpec spec;
  if (!instance_path.empty()) {
    spec.kind = "instance_file";
    spec.path = instance_path;
  } else if (!config_path.empty()) {
    spec = load_experiment_config(config_path).env;
  } else {
    throw ConfigError("pass --config or --instance");
  }
  if (hide_enum) spec.hide_enumeration = true;
  return spec;
}

int cmd_train(const CommonOverrides& ov) {
  ExperimentConfig cfg = load_with_overrides(ov);
  if (cfg.learner.n <= 0 && !cfg.n_override) {
    // surface the Theorem-1 number before running
    const std::unique_ptr<LeveledMdp> mdp = build_environment(cfg.env);
    const std::unique_ptr<PolicyFamily> family = build_family(cfg.policy, *mdp);
    SampleSizeInputs in;
    in.eps = cfg.learner.eps;
    in.delta = cfg.learner.delta;
    in.horizon = mdp->horizon();
    in.action_count = mdp->action_count();
    in.window = cfg.learner.window;
    in.theta_dim = family->param_dim();
    in.rho = family->certified_lipschitz(mdp->state_norm_bound());
    in.bound = family->norm_bound();
    const SampleSizeResult res = theorem1_sample_size(in);
    if (res.astronomical)
      std::cout << "theorem-1 n = astronomical (exact: "
                << theorem1_sample_size_exact(in) << ")\n";
    else
      std::cout << "theorem-1 n = " << res.n << "\n";
  }
  if (cfg.n_override)
    std::cout << "warning: overriding sample size with n = " << *cfg.n_override
              << "\n";
  const TrainOutcome out = run_train(cfg);
  std::cout << "n = " << out.resolved_n
            << (out.n_from_formula ? " (from Theorem-1 formula)" : "") << "\n";
  double successes = 0.0;
  for (const TrainRunRow& r : out.rows) successes += r.success ? 1.0 : 0.0;
  std::cout << "runs: " << out.rows.size() << "  success fraction: "
            << (out.rows.empty() ? 0.0 : successes / out.rows.size()) << "\n";
  std::cout << "wrote " << cfg.out_dir << "/summary.csv\n";
  return kExitOk;
}

int cmd_verify(const std::string& config_path, const std::string& instance_path,
               bool hide_enum, const std::string& out_dir) {
  const EnvironmentSpec spec =
      env_spec_from_flags(config_path, instance_path, hide_enum);
  const VerifyOutcome out = run_verify(spec);
  std::cout << out.report_text;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir + "/verify_report.txt", out.report_text);
    std::cout << "wrote " << out_dir << "/verify_report.txt\n";
  }
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, const CommonOverrides& ov) {
  SweepConfig cfg = load_sweep_config(config_path);
  if (ov.seed) cfg.base.seed = *ov.seed;
  if (ov.repeats) cfg.base.repeats = *ov.repeats;
  if (ov.out) cfg.base.out_dir = *ov.out;
  if (ov.cap_n) cfg.base.cap_n = *ov.cap_n;
  if (ov.n_override) cfg.base.n_override = *ov.n_override;
  if (ov.jobs) cfg.base.jobs = *ov.jobs;
  const SweepOutcome out = run_sweep(cfg);
  std::cout << out.csv;
  std::cout << "wrote " << cfg.base.out_dir << "/aggregated.csv\n";
  return kExitOk;
}

int cmd_hardness(int depth, int budget, int trials, std::uint64_t seed,
                 const std::string& out_dir) {
  const HardnessOutcome out =
      run_hardness_demo(depth, budget, trials, seed, out_dir);
  std::cout << out.report_text;
  return kExitOk;
}

int cmd_oracle_eval(const std::string& config_path, const std::string& instance_path,
                    bool hide_enum, const std::string& op,
                    const std::string& policy_path, int t_level) {
  const EnvironmentSpec spec =
      env_spec_from_flags(config_path, instance_path, hide_enum);
  const std::unique_ptr<LeveledMdp> mdp = build_environment(spec);

  auto family_and_policy = [&](void) {
    std::unique_ptr<PolicyFamily> fam;
    PolicyVector vec;
    if (policy_path.empty()) {
      PolicySpec ps;
      ps.bound = 1.0;
      fam = build_family(ps, *mdp);
      vec = uniform_policy_vector(*fam, mdp->horizon());
    } else {
      const LoadedPolicy loaded = load_policy_vector_file(policy_path);
      PolicySpec ps;
      ps.family = loaded.family_tag;
      double bound = 0.0;
      for (const PolicyParams& p : loaded.vector.slots)
        bound = std::max(bound, p.norm());
      ps.bound = std::max(1.0, bound * (1.0 + 1e-9));
      fam = build_family(ps, *mdp);
      if (fam->param_dim() != loaded.param_dim)
        throw ConfigError("policy file dimension does not match the environment");
      vec = loaded.vector;
      if (vec.horizon() != mdp->horizon())
        throw ConfigError("policy file horizon does not match the environment");
    }
    return std::make_pair(std::move(fam), std::move(vec));
  };

  if (op == "generic-game") {
    const GenericGameReport rep = check_generic_game(*mdp);
    std::cout << "failure_set_nonempty: " << rep.failure_set_nonempty << "\n"
              << "trivial_game: " << rep.trivial_game << "\n"
              << "min_deterministic_failure_prob: "
              << rep.min_deterministic_failure_prob << "\n"
              << "completeness_ok: " << rep.completeness_ok << "\n"
              << "pass: " << rep.pass() << "\n";
  } else if (op == "min-epw") {
    const EpwCertificate cert = min_epw_constant(*mdp);
    std::cout << "min_epw_constant: " << cert.min_c << "\n";
  } else if (op == "safe-set") {
    const SafeSetTable table = max_safe_set(*mdp);
    std::cout << "safe_per_level:";
    for (int c : table.safe_count_by_level) std::cout << ' ' << c;
    std::cout << "\n";
  } else if (op == "value") {
    auto [fam, vec] = family_and_policy();
    std::cout << "policy_value: " << policy_value(*mdp, *fam, vec) << "\n";
  } else if (op == "occupancy") {
    auto [fam, vec] = family_and_policy();
    std::cout << "safe_occupancy(t=" << t_level
              << "): " << safe_occupancy(*mdp, *fam, vec, t_level) << "\n";
  } else {
    throw ConfigError("unknown oracle op '" + op + "'");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective planning window toolkit"};
  app.require_subcommand(1);

  CommonOverrides ov;
  std::string instance_path;
  std::string verify_out;
  bool hide_enum = false;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* opt = sub->add_option("--config", ov.config_path, "JSON config file");
    if (need_config) opt->required();
    sub->add_option("--seed", [&](const CLI::results_t& v) {
      ov.seed = std::stoull(v.front());
      return true;
    }, "master seed override");
    sub->add_option("--repeats", [&](const CLI::results_t& v) {
      ov.repeats = std::stoi(v.front());
      return true;
    }, "repeat count override");
    sub->add_option("--n-override", [&](const CLI::results_t& v) {
      ov.n_override = std::stoull(v.front());
      return true;
    }, "replace the sample size (logged)");
    sub->add_option("--out", [&](const CLI::results_t& v) {
      ov.out = v.front();
      return true;
    }, "output directory override");
    sub->add_option("--cap-n", [&](const CLI::results_t& v) {
      ov.cap_n = std::stoull(v.front());
      return true;
    }, "refuse formula-derived n above this cap");
    sub->add_option("--jobs", [&](const CLI::results_t& v) {
      ov.jobs = std::stoi(v.front());
      return true;
    }, "parallel repeats");
  };

  CLI::App* train = app.add_subcommand("train", "run the per-level ERM algorithm");
  add_common(train, true);

  CLI::App* verify = app.add_subcommand(
      "verify", "check the Generic Game conditions and the planning window");
  verify->add_option("--config", ov.config_path, "JSON config (environment used)");
  verify->add_option("--instance", instance_path, "instance file");
  verify->add_option("--out", verify_out, "directory for the report");
  verify->add_flag("--hide-enumeration", hide_enum,
                   "treat the environment as feature-only");

  CLI::App* sweep = app.add_subcommand("sweep", "grid or paired parameter sweep");
  std::string sweep_config;
  sweep->add_option("--config", sweep_config, "sweep JSON config")->required();
  add_common(sweep, false);

  CLI::App* hard = app.add_subcommand("hardness-demo",
                                      "uniform search on the hard tree");
  int depth = 12, budget = 200, trials = 20;
  std::uint64_t hseed = 0;
  std::string hout;
  hard->add_option("--H", depth, "tree depth (<= 20)");
  hard->add_option("--budget", budget, "episodes per trial");
  hard->add_option("--trials", trials, "number of trials");
  hard->add_option("--seed", hseed, "seed");
  hard->add_option("--out", hout, "directory for the report");

  CLI::App* oracle = app.add_subcommand("oracle-eval", "direct oracle queries");
  std::string op = "generic-game";
  std::string policy_path;
  int t_level = 0;
  oracle->add_option("--config", ov.config_path, "JSON config (environment used)");
  oracle->add_option("--instance", instance_path, "instance file");
  oracle->add_option("--op", op,
                     "generic-game | min-epw | safe-set | value | occupancy");
  oracle->add_option("--policy", policy_path, "policy vector file");
  oracle->add_option("--t", t_level, "level for occupancy");
  oracle->add_flag("--hide-enumeration", hide_enum,
                   "treat the environment as feature-only");

  CLI::App* export_cmd =
      app.add_subcommand("export-instance", "write an environment's tables");
  std::string export_path;
  export_cmd->add_option("--config", ov.config_path, "JSON config (environment used)")
      ->required();
  export_cmd->add_option("--to", export_path, "destination file")->required();

  try {
    app.parse(argc, argv);
    if (train->parsed()) return cmd_train(ov);
    if (verify->parsed())
      return cmd_verify(ov.config_path, instance_path, hide_enum, verify_out);
    if (sweep->parsed()) return cmd_sweep(sweep_config, ov);
    if (hard->parsed()) return cmd_hardness(depth, budget, trials, hseed, hout);
    if (oracle->parsed())
      return cmd_oracle_eval(ov.config_path, instance_path, hide_enum, op,
                             policy_path, t_level);
    if (export_cmd->parsed()) {
      const EnvironmentSpec spec =
          env_spec_from_flags(ov.config_path, "", false);
      const std::unique_ptr<LeveledMdp> mdp = build_environment(spec);
      save_instance_file(*mdp, export_path);
      std::cout << "wrote " << export_path << "\n";
      return kExitOk;
    }
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const RefusalError& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kExitRefusal;
  } catch (const ConsistencyError& e) {
    std::cerr << "internal consistency failure: " << e.what() << "\n";
    return kExitConsistency;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
