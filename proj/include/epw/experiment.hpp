#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "epw/environments.hpp"
#include "epw/learner.hpp"
#include "epw/mdp.hpp"
#include "epw/oracle.hpp"
#include "epw/policy.hpp"

namespace epw {

struct EnvironmentSpec {
  std::string kind = "gates";  // paddle | gates | tree_hard | random_epw | instance_file
  PaddleConfig paddle;
  GatesConfig gates;
  TreeHardConfig tree;
  RandomEpwConfig random_epw;
  std::string path;  // for instance_file
  bool hide_enumeration = false;
};

struct PolicySpec {
  std::string family = "softmax_linear";  // or "mlp"
  int hidden = 8;
  double bound = 16.0;
};

struct LearnerSpec {
  int n = 0;  // 0: route through the Theorem-1 formula with (eps, delta)
  double eps = 0.1;
  double delta = 0.05;
  int window = 2;
  ErmConfig erm{8, 300, 1.0, 16.0, 0};
};

struct ExperimentConfig {
  EnvironmentSpec env;
  PolicySpec policy;
  LearnerSpec learner;
  int repeats = 1;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  double success_eps = 0.2;  // success@eps: value >= 1 - eps
  std::uint64_t cap_n = 1000000;
  std::optional<std::uint64_t> n_override;
  int eval_rollouts = 10000;  // Monte-Carlo fallback when no oracle
  int jobs = 1;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);
std::string canonical_config_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

std::unique_ptr<LeveledMdp> build_environment(const EnvironmentSpec& spec);
std::unique_ptr<PolicyFamily> build_family(const PolicySpec& spec,
                                           const LeveledMdp& mdp);

struct TrainRunRow {
  std::uint64_t seed = 0;
  bool oracle_exact = false;
  double final_value = 0.0;
  double final_value_se = 0.0;
  bool success = false;
  double wall_ms = 0.0;
};

struct TrainOutcome {
  std::vector<RunRecord> records;
  std::vector<TrainRunRow> rows;
  std::uint64_t resolved_n = 0;
  bool n_from_formula = false;
  std::string summary_csv;  // deterministic body, including header lines
  std::string hash;
};

// Executes the runs without touching the filesystem.
TrainOutcome execute_train(const ExperimentConfig& cfg);

// Executes and writes summary.csv, timings.csv and per-run artifacts under
// cfg.out_dir. Returns the outcome for inspection.
TrainOutcome run_train(const ExperimentConfig& cfg);

struct VerifyOutcome {
  GenericGameReport game;
  EpwCertificate cert;
  std::vector<int> safe_per_level;
  std::vector<bool> witness_ok;
  std::string report_text;
};

VerifyOutcome run_verify(const EnvironmentSpec& spec);

struct SweepPoint {
  std::map<std::string, double> axes;
  double success_rate = 0.0;
  double mean_final_value = 0.0;
  int repeats = 0;
};

struct SweepConfig {
  ExperimentConfig base;
  std::string mode = "grid";  // grid | paired
  std::vector<std::pair<std::string, std::vector<double>>> axes;  // sorted by name
};

SweepConfig parse_sweep_config(const std::string& json_text);
SweepConfig load_sweep_config(const std::string& path);

struct SweepOutcome {
  std::vector<SweepPoint> points;
  std::string csv;
};

SweepOutcome execute_sweep(const SweepConfig& cfg);
SweepOutcome run_sweep(const SweepConfig& cfg);  // also writes aggregated.csv

struct HardnessOutcome {
  int depth = 0;
  int budget = 0;
  int trials = 0;
  double empirical_success_rate = 0.0;
  double analytic_success_prob = 0.0;  // 1 - (1 - 2^{1-H})^budget
  double uniform_policy_value = 0.0;   // DP-exact 2^{1-H}
  std::string report_text;
};

HardnessOutcome run_hardness_demo(int depth, int budget, int trials,
                                  std::uint64_t seed, const std::string& out_dir);

// Serialization helpers shared by the CLI and tests.
std::string run_record_report(const RunRecord& rec, const std::string& hash);
std::string run_record_levels_csv(const RunRecord& rec, const std::string& hash);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace epw
