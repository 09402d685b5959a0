#include "epw/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "epw/errors.hpp"
#include "epw/instance_io.hpp"
#include "epw/policy_io.hpp"
#include "epw/sample_size.hpp"
#include "epw/sampling.hpp"

namespace epw {

namespace {

using nlohmann::json;

constexpr std::uint64_t kRepTag = 0x72657000ULL;   // "rep"
constexpr std::uint64_t kEvalTag = 0x6576616cULL;  // "eval"

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json env_to_json(const EnvironmentSpec& e) {
  json j;
  j["kind"] = e.kind;
  if (e.kind == "paddle") {
    j["width"] = e.paddle.width;
    j["spawn_distance"] = e.paddle.spawn_distance;
    j["horizon"] = e.paddle.horizon;
    j["seed"] = e.paddle.seed;
  } else if (e.kind == "gates") {
    j["width"] = e.gates.width;
    j["gate_period"] = e.gates.gate_period;
    j["horizon"] = e.gates.horizon;
    j["seed"] = e.gates.seed;
  } else if (e.kind == "tree_hard") {
    j["depth"] = e.tree.depth;
    j["seed"] = e.tree.seed;
  } else if (e.kind == "random_epw") {
    j["planted_c"] = e.random_epw.planted_c;
    j["states_per_level"] = e.random_epw.states_per_level;
    j["horizon"] = e.random_epw.horizon;
    j["action_count"] = e.random_epw.action_count;
    j["seed"] = e.random_epw.seed;
  } else if (e.kind == "instance_file") {
    j["path"] = e.path;
  }
  if (e.hide_enumeration) j["hide_enumeration"] = true;
  return j;
}

EnvironmentSpec env_from_json(const json& j) {
  EnvironmentSpec e;
  if (!j.contains("kind")) throw ConfigError("environment: missing 'kind'");
  e.kind = j.at("kind").get<std::string>();
  auto geti = [&](const char* f, int dflt) {
    return j.contains(f) ? j.at(f).get<int>() : dflt;
  };
  auto getu = [&](const char* f, std::uint64_t dflt) {
    return j.contains(f) ? j.at(f).get<std::uint64_t>() : dflt;
  };
  if (e.kind == "paddle") {
    e.paddle.width = geti("width", e.paddle.width);
    e.paddle.spawn_distance = geti("spawn_distance", e.paddle.spawn_distance);
    e.paddle.horizon = geti("horizon", e.paddle.horizon);
    e.paddle.seed = getu("seed", e.paddle.seed);
  } else if (e.kind == "gates") {
    e.gates.width = geti("width", e.gates.width);
    e.gates.gate_period = geti("gate_period", e.gates.gate_period);
    e.gates.horizon = geti("horizon", e.gates.horizon);
    e.gates.seed = getu("seed", e.gates.seed);
  } else if (e.kind == "tree_hard") {
    e.tree.depth = geti("depth", e.tree.depth);
    e.tree.seed = getu("seed", e.tree.seed);
  } else if (e.kind == "random_epw") {
    e.random_epw.planted_c = geti("planted_c", e.random_epw.planted_c);
    e.random_epw.states_per_level =
        geti("states_per_level", e.random_epw.states_per_level);
    e.random_epw.horizon = geti("horizon", e.random_epw.horizon);
    e.random_epw.action_count = geti("action_count", e.random_epw.action_count);
    e.random_epw.seed = getu("seed", e.random_epw.seed);
  } else if (e.kind == "instance_file") {
    if (!j.contains("path"))
      throw ConfigError("environment: instance_file needs 'path'");
    e.path = j.at("path").get<std::string>();
  } else {
    throw ConfigError("environment: unknown kind '" + e.kind + "'");
  }
  if (j.contains("hide_enumeration"))
    e.hide_enumeration = j.at("hide_enumeration").get<bool>();
  return e;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["environment"] = env_to_json(c.env);
  j["policy"] = {{"family", c.policy.family},
                 {"hidden", c.policy.hidden},
                 {"bound", c.policy.bound}};
  j["learner"] = {{"n", c.learner.n},
                  {"eps", c.learner.eps},
                  {"delta", c.learner.delta},
                  {"window", c.learner.window},
                  {"erm",
                   {{"restarts", c.learner.erm.restarts},
                    {"steps", c.learner.erm.steps},
                    {"step_size", c.learner.erm.step_size},
                    {"bound", c.learner.erm.bound}}}};
  j["repeats"] = c.repeats;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["success_eps"] = c.success_eps;
  j["cap_n"] = c.cap_n;
  if (c.n_override) j["n_override"] = *c.n_override;
  j["eval_rollouts"] = c.eval_rollouts;
  return j;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  try {
    ExperimentConfig c;
    if (!j.contains("environment"))
      throw ConfigError("config: missing 'environment'");
    c.env = env_from_json(j.at("environment"));
    if (j.contains("policy")) {
      const json& p = j.at("policy");
      if (p.contains("family")) c.policy.family = p.at("family").get<std::string>();
      if (p.contains("hidden")) c.policy.hidden = p.at("hidden").get<int>();
      if (p.contains("bound")) c.policy.bound = p.at("bound").get<double>();
    }
    if (j.contains("learner")) {
      const json& l = j.at("learner");
      if (l.contains("n")) c.learner.n = l.at("n").get<int>();
      if (l.contains("eps")) c.learner.eps = l.at("eps").get<double>();
      if (l.contains("delta")) c.learner.delta = l.at("delta").get<double>();
      if (l.contains("window")) c.learner.window = l.at("window").get<int>();
      if (l.contains("erm")) {
        const json& e = l.at("erm");
        if (e.contains("restarts")) c.learner.erm.restarts = e.at("restarts").get<int>();
        if (e.contains("steps")) c.learner.erm.steps = e.at("steps").get<int>();
        if (e.contains("step_size"))
          c.learner.erm.step_size = e.at("step_size").get<double>();
        if (e.contains("bound")) c.learner.erm.bound = e.at("bound").get<double>();
      }
    }
    c.learner.erm.bound = c.policy.bound;  // one ball for family and ERM
    if (j.contains("repeats")) c.repeats = j.at("repeats").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("success_eps")) c.success_eps = j.at("success_eps").get<double>();
    if (j.contains("cap_n")) c.cap_n = j.at("cap_n").get<std::uint64_t>();
    if (j.contains("n_override"))
      c.n_override = j.at("n_override").get<std::uint64_t>();
    if (j.contains("eval_rollouts"))
      c.eval_rollouts = j.at("eval_rollouts").get<int>();
    if (j.contains("jobs")) c.jobs = j.at("jobs").get<int>();
    if (c.repeats < 0) throw ConfigError("config: repeats must be >= 0");
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

std::string canonical_config_json(const ExperimentConfig& cfg) {
  return config_to_json(cfg).dump();
}

namespace {
std::string fnv_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}
}  // namespace

std::string config_hash(const ExperimentConfig& cfg) {
  return fnv_hex(canonical_config_json(cfg));
}

std::unique_ptr<LeveledMdp> build_environment(const EnvironmentSpec& spec) {
  std::shared_ptr<LeveledMdp> base;
  if (spec.kind == "paddle") {
    base = std::make_shared<TabularMdp>(make_paddle(spec.paddle));
  } else if (spec.kind == "gates") {
    base = std::make_shared<TabularMdp>(make_gates(spec.gates));
  } else if (spec.kind == "tree_hard") {
    base = std::make_shared<TabularMdp>(make_tree_hard(spec.tree));
  } else if (spec.kind == "random_epw") {
    base = std::make_shared<TabularMdp>(generate_random_epw(spec.random_epw).first);
  } else if (spec.kind == "instance_file") {
    base = std::make_shared<TabularMdp>(load_instance_file(spec.path));
  } else {
    throw ConfigError("unknown environment kind '" + spec.kind + "'");
  }
  if (spec.hide_enumeration) return std::make_unique<OpaqueMdp>(base);
  // hand the shared instance out behind a unique_ptr-compatible wrapper
  struct Holder final : LeveledMdp {
    std::shared_ptr<LeveledMdp> inner;
    explicit Holder(std::shared_ptr<LeveledMdp> p) : inner(std::move(p)) {}
    int horizon() const override { return inner->horizon(); }
    int action_count() const override { return inner->action_count(); }
    int feature_dim() const override { return inner->feature_dim(); }
    const State& initial_state() const override { return inner->initial_state(); }
    State sample_transition(const State& s, int a, RngStream& r) const override {
      return inner->sample_transition(s, a, r);
    }
    bool failure_test(const State& s) const override {
      return inner->failure_test(s);
    }
    const Enumeration* enumeration() const override { return inner->enumeration(); }
    double state_norm_bound() const override { return inner->state_norm_bound(); }
    std::string name() const override { return inner->name(); }
  };
  return std::make_unique<Holder>(std::move(base));
}

std::unique_ptr<PolicyFamily> build_family(const PolicySpec& spec,
                                           const LeveledMdp& mdp) {
  if (spec.family == "softmax_linear")
    return std::make_unique<SoftmaxLinearFamily>(mdp.action_count(),
                                                 mdp.feature_dim(), spec.bound);
  if (spec.family == "mlp")
    return std::make_unique<MlpFamily>(mdp.action_count(), mdp.feature_dim(),
                                       spec.hidden, spec.bound);
  throw ConfigError("unknown policy family '" + spec.family + "'");
}

namespace {

std::uint64_t resolve_n(const ExperimentConfig& cfg, const LeveledMdp& mdp,
                        const PolicyFamily& family, bool* from_formula) {
  *from_formula = false;
  if (cfg.n_override) return *cfg.n_override;
  if (cfg.learner.n > 0) return static_cast<std::uint64_t>(cfg.learner.n);
  *from_formula = true;
  SampleSizeInputs in;
  in.eps = cfg.learner.eps;
  in.delta = cfg.learner.delta;
  in.horizon = mdp.horizon();
  in.action_count = mdp.action_count();
  in.window = cfg.learner.window;
  in.theta_dim = family.param_dim();
  in.rho = family.certified_lipschitz(mdp.state_norm_bound());
  in.bound = family.norm_bound();
  const SampleSizeResult res = theorem1_sample_size(in);
  if (res.astronomical || res.n > cfg.cap_n)
    throw RefusalError(
        "Theorem-1 sample size " +
        (res.astronomical ? std::string("(astronomical)") : std::to_string(res.n)) +
        " exceeds cap " + std::to_string(cfg.cap_n) +
        "; pass an explicit n override to proceed");
  return res.n;
}

}  // namespace

TrainOutcome execute_train(const ExperimentConfig& cfg) {
  const std::unique_ptr<LeveledMdp> mdp = build_environment(cfg.env);
  const std::unique_ptr<PolicyFamily> family = build_family(cfg.policy, *mdp);
  TrainOutcome out;
  out.hash = config_hash(cfg);
  bool from_formula = false;
  out.resolved_n = resolve_n(cfg, *mdp, *family, &from_formula);
  out.n_from_formula = from_formula;

  out.records.resize(static_cast<std::size_t>(cfg.repeats));
  out.rows.resize(static_cast<std::size_t>(cfg.repeats));

  auto one_repeat = [&](int i) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t run_seed =
        derive_stream(cfg.seed, kRepTag, static_cast<std::uint64_t>(i));
    ErmConfig erm = cfg.learner.erm;
    erm.bound = cfg.policy.bound;
    auto [thetas, rec] =
        run_algorithm1(*mdp, *family, static_cast<int>(out.resolved_n),
                       cfg.learner.window, run_seed, erm);
    if (mdp->enumeration() != nullptr) {
      rec.oracle_exact = true;
      rec.final_value = policy_value(*mdp, *family, thetas);
      rec.final_value_se = 0.0;
    } else {
      const ValueEstimate est = monte_carlo_value(
          *mdp, *family, thetas, cfg.eval_rollouts,
          derive_stream(run_seed, kEvalTag));
      rec.oracle_exact = false;
      rec.final_value = est.mean;
      rec.final_value_se = est.std_error;
    }
    TrainRunRow row;
    row.seed = run_seed;
    row.oracle_exact = rec.oracle_exact;
    row.final_value = rec.final_value;
    row.final_value_se = rec.final_value_se;
    row.success = rec.final_value >= 1.0 - cfg.success_eps;
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    out.records[static_cast<std::size_t>(i)] = std::move(rec);
    out.rows[static_cast<std::size_t>(i)] = row;
  };

  int jobs = cfg.jobs;
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min(jobs, cfg.repeats));
  if (jobs <= 1 || cfg.repeats <= 1) {
    for (int i = 0; i < cfg.repeats; ++i) one_repeat(i);
  } else {
    std::atomic<int> counter{0};
    std::vector<std::future<void>> futs;
    for (int j = 0; j < jobs; ++j)
      futs.push_back(std::async(std::launch::async, [&]() {
        for (int i = counter.fetch_add(1); i < cfg.repeats;
             i = counter.fetch_add(1))
          one_repeat(i);
      }));
    for (auto& f : futs) f.get();
  }

  std::ostringstream csv;
  csv << "# schema: epw-train-summary v1\n";
  csv << "# config-hash: " << out.hash << "\n";
  csv << "seed,value_kind,final_value,final_value_se,success@eps\n";
  for (const TrainRunRow& r : out.rows)
    csv << r.seed << ',' << (r.oracle_exact ? "oracle" : "monte_carlo") << ','
        << fmt_double(r.final_value) << ',' << fmt_double(r.final_value_se)
        << ',' << (r.success ? 1 : 0) << "\n";
  out.summary_csv = csv.str();
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw ConfigError("cannot open output file: " + path);
  outf << content;
}

std::string run_record_report(const RunRecord& rec, const std::string& hash) {
  std::ostringstream r;
  r << "# schema: epw-run-record v1\n";
  r << "config-hash: " << hash << "\n";
  r << "mdp: " << rec.mdp_name << "\n";
  r << "family: " << rec.family_tag << "\n";
  r << "horizon: " << rec.horizon << "\n";
  r << "actions: " << rec.action_count << "\n";
  r << "n: " << rec.n << "\n";
  r << "window: " << rec.window << "\n";
  r << "seed: " << rec.seed << "\n";
  r << "erm: restarts=" << rec.erm.restarts << " steps=" << rec.erm.steps
    << " step_size=" << fmt_double(rec.erm.step_size)
    << " bound=" << fmt_double(rec.erm.bound) << "\n";
  r << "levels: " << rec.levels.size() << "\n";
  r << "value_kind: " << (rec.oracle_exact ? "oracle" : "monte_carlo") << "\n";
  r << "final_value: " << fmt_double(rec.final_value) << "\n";
  r << "final_value_se: " << fmt_double(rec.final_value_se) << "\n";
  r << "core_digest: " << rec.core_digest() << "\n";
  return r.str();
}

std::string run_record_levels_csv(const RunRecord& rec, const std::string& hash) {
  std::ostringstream csv;
  csv << "# schema: epw-run-levels v1\n";
  csv << "# config-hash: " << hash << "\n";
  csv << "level,loss_before,loss_after,restart_chosen,safe_occupancy,wall_time_ms\n";
  for (const LevelRecord& lr : rec.levels)
    csv << lr.level << ',' << fmt_double(lr.loss_before) << ','
        << fmt_double(lr.loss_after) << ',' << lr.restart_chosen << ','
        << fmt_double(lr.safe_occupancy) << ',' << fmt_double(lr.wall_ms)
        << "\n";
  return csv.str();
}

TrainOutcome run_train(const ExperimentConfig& cfg) {
  TrainOutcome out = execute_train(cfg);
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  write_text_file(cfg.out_dir + "/summary.csv", out.summary_csv);

  std::ostringstream timing;
  timing << "# schema: epw-train-timings v1\n";
  timing << "# config-hash: " << out.hash << "\n";
  timing << "seed,wall_time_ms\n";
  for (const TrainRunRow& r : out.rows)
    timing << r.seed << ',' << fmt_double(r.wall_ms) << "\n";
  write_text_file(cfg.out_dir + "/timings.csv", timing.str());

  for (int i = 0; i < static_cast<int>(out.records.size()); ++i) {
    const RunRecord& rec = out.records[static_cast<std::size_t>(i)];
    const std::string stem = cfg.out_dir + "/run_" + std::to_string(i);
    write_text_file(stem + "_record.txt", run_record_report(rec, out.hash));
    write_text_file(stem + "_levels.csv", run_record_levels_csv(rec, out.hash));
    std::ofstream pol(stem + "_policy.txt");
    if (!pol) throw ConfigError("cannot open policy output file");
    save_policy_vector(rec.final_thetas, rec.family_tag, pol);
  }
  return out;
}

VerifyOutcome run_verify(const EnvironmentSpec& spec) {
  const std::unique_ptr<LeveledMdp> mdp = build_environment(spec);
  const Enumeration& e = require_enumeration(*mdp);
  VerifyOutcome out;
  out.game = check_generic_game(*mdp);
  out.cert = min_epw_constant(*mdp);
  const SafeSetTable table = max_safe_set(*mdp);
  out.safe_per_level = table.safe_count_by_level;
  for (const EpwWitness& w : out.cert.witnesses)
    out.witness_ok.push_back(validate_witness(*mdp, table, w));

  std::ostringstream r;
  r << "# schema: epw-verify v1\n";
  r << "mdp: " << mdp->name() << "\n";
  r << "states: " << e.state_count() << "\n";
  r << "failure_states: " << e.count_kind(StateKind::kFailure) << "\n";
  r << "failure_set_nonempty: " << (out.game.failure_set_nonempty ? "yes" : "no")
    << "\n";
  if (out.game.trivial_game)
    r << "warning: empty failure set, the game is trivially winnable\n";
  r << "binary_rewards_ok: " << (out.game.binary_rewards_ok ? "yes" : "no") << "\n";
  r << "min_deterministic_failure_prob: "
    << fmt_double(out.game.min_deterministic_failure_prob) << "\n";
  r << "completeness_threshold: " << fmt_double(out.game.completeness_threshold)
    << "\n";
  r << "completeness_ok: " << (out.game.completeness_ok ? "yes" : "no") << "\n";
  r << "generic_game_pass: " << (out.game.pass() ? "yes" : "no") << "\n";
  r << "min_epw_constant: " << out.cert.min_c << "\n";
  r << "safe_per_level:";
  for (int c : out.safe_per_level) r << ' ' << c;
  r << "\n";
  for (std::size_t i = 0; i < out.cert.witnesses.size(); ++i) {
    const EpwWitness& w = out.cert.witnesses[i];
    r << "witness x=" << w.x << ": state " << w.state_id << " has unsafe "
      << w.x << "-ancestor " << w.ancestor_id << " ("
      << (out.witness_ok[i] ? "validated" : "INVALID") << ")\n";
  }
  out.report_text = r.str();
  return out;
}

SweepConfig parse_sweep_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("sweep parse error: ") + e.what());
  }
  SweepConfig cfg;
  if (!j.contains("base")) throw ConfigError("sweep: missing 'base'");
  cfg.base = parse_experiment_config(j.at("base").dump());
  if (j.contains("mode")) cfg.mode = j.at("mode").get<std::string>();
  if (cfg.mode != "grid" && cfg.mode != "paired")
    throw ConfigError("sweep: mode must be grid or paired");
  if (!j.contains("axes") || !j.at("axes").is_object() || j.at("axes").empty())
    throw ConfigError("sweep: missing 'axes'");
  for (const auto& [name, values] : j.at("axes").items()) {
    std::vector<double> vals;
    for (const auto& v : values) vals.push_back(v.get<double>());
    if (vals.empty()) throw ConfigError("sweep: axis '" + name + "' is empty");
    cfg.axes.emplace_back(name, std::move(vals));
  }
  std::sort(cfg.axes.begin(), cfg.axes.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  if (cfg.mode == "paired") {
    for (const auto& [name, vals] : cfg.axes)
      if (vals.size() != cfg.axes.front().second.size())
        throw ConfigError("sweep: paired axes must have equal lengths");
  }
  return cfg;
}

SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sweep config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sweep_config(ss.str());
}

namespace {

void apply_axis(ExperimentConfig& cfg, const std::string& name, double value) {
  const int iv = static_cast<int>(value);
  if (name == "n") {
    cfg.learner.n = iv;
  } else if (name == "window") {
    cfg.learner.window = iv;
  } else if (name == "horizon") {
    if (cfg.env.kind == "paddle") cfg.env.paddle.horizon = iv;
    else if (cfg.env.kind == "gates") cfg.env.gates.horizon = iv;
    else if (cfg.env.kind == "tree_hard") cfg.env.tree.depth = iv;
    else if (cfg.env.kind == "random_epw") cfg.env.random_epw.horizon = iv;
    else throw ConfigError("sweep: horizon axis unsupported for this environment");
  } else if (name == "width") {
    if (cfg.env.kind == "paddle") cfg.env.paddle.width = iv;
    else if (cfg.env.kind == "gates") cfg.env.gates.width = iv;
    else throw ConfigError("sweep: width axis unsupported for this environment");
  } else if (name == "gate_period") {
    if (cfg.env.kind != "gates")
      throw ConfigError("sweep: gate_period axis needs the gates environment");
    cfg.env.gates.gate_period = iv;
  } else if (name == "spawn_distance") {
    if (cfg.env.kind != "paddle")
      throw ConfigError("sweep: spawn_distance axis needs the paddle environment");
    cfg.env.paddle.spawn_distance = iv;
  } else {
    throw ConfigError("sweep: unknown axis '" + name + "'");
  }
}

}  // namespace

SweepOutcome execute_sweep(const SweepConfig& cfg) {
  std::vector<std::vector<double>> points;
  const std::size_t n_axes = cfg.axes.size();
  if (cfg.mode == "paired") {
    const std::size_t len = cfg.axes.front().second.size();
    for (std::size_t i = 0; i < len; ++i) {
      std::vector<double> pt(n_axes);
      for (std::size_t a = 0; a < n_axes; ++a) pt[a] = cfg.axes[a].second[i];
      points.push_back(std::move(pt));
    }
  } else {
    std::vector<std::size_t> odo(n_axes, 0);
    while (true) {
      std::vector<double> pt(n_axes);
      for (std::size_t a = 0; a < n_axes; ++a)
        pt[a] = cfg.axes[a].second[odo[a]];
      points.push_back(std::move(pt));
      std::size_t a = n_axes;
      while (a > 0) {
        --a;
        if (++odo[a] < cfg.axes[a].second.size()) break;
        odo[a] = 0;
        if (a == 0) a = SIZE_MAX;
      }
      if (a == SIZE_MAX) break;
    }
  }

  SweepOutcome out;
  std::ostringstream csv;
  csv << "# schema: epw-sweep v1\n";
  csv << "# config-hash: " << fnv_hex(canonical_config_json(cfg.base)) << "\n";
  for (const auto& [name, vals] : cfg.axes) csv << name << ',';
  csv << "repeats,success_rate,mean_final_value\n";

  for (const auto& pt : points) {
    ExperimentConfig c = cfg.base;
    for (std::size_t a = 0; a < n_axes; ++a)
      apply_axis(c, cfg.axes[a].first, pt[a]);
    const TrainOutcome res = execute_train(c);
    SweepPoint sp;
    sp.repeats = c.repeats;
    double successes = 0.0;
    double value = 0.0;
    for (const TrainRunRow& r : res.rows) {
      successes += r.success ? 1.0 : 0.0;
      value += r.final_value;
    }
    sp.success_rate = res.rows.empty() ? 0.0 : successes / res.rows.size();
    sp.mean_final_value = res.rows.empty() ? 0.0 : value / res.rows.size();
    for (std::size_t a = 0; a < n_axes; ++a) {
      sp.axes[cfg.axes[a].first] = pt[a];
      csv << fmt_double(pt[a]) << ',';
    }
    csv << sp.repeats << ',' << fmt_double(sp.success_rate) << ','
        << fmt_double(sp.mean_final_value) << "\n";
    out.points.push_back(std::move(sp));
  }
  out.csv = csv.str();
  return out;
}

SweepOutcome run_sweep(const SweepConfig& cfg) {
  SweepOutcome out = execute_sweep(cfg);
  std::filesystem::create_directories(cfg.base.out_dir);
  write_text_file(cfg.base.out_dir + "/aggregated.csv", out.csv);
  return out;
}

HardnessOutcome run_hardness_demo(int depth, int budget, int trials,
                                  std::uint64_t seed, const std::string& out_dir) {
  if (depth < 2) throw ConfigError("hardness demo: depth must be >= 2");
  if (depth > 20)
    throw RefusalError("hardness demo: depth capped at 20 for tractability");
  if (budget < 0 || trials < 1)
    throw ConfigError("hardness demo: bad budget or trial count");

  const TabularMdp tree = make_tree_hard(TreeHardConfig{depth, seed});
  const SoftmaxLinearFamily family(tree.action_count(), tree.feature_dim(), 1.0);
  const PolicyVector uniform = uniform_policy_vector(family, depth);

  int winners = 0;
  for (int trial = 0; trial < trials; ++trial) {
    bool won = false;
    for (int ep = 0; ep < budget && !won; ++ep) {
      RngStream rng(seed, 0x68617264ULL,
                    static_cast<std::uint64_t>(trial) * 1000003ULL +
                        static_cast<std::uint64_t>(ep));
      won = trajectory_return(sample_trajectory(tree, family, uniform, rng)) == 1;
    }
    winners += won ? 1 : 0;
  }

  HardnessOutcome out;
  out.depth = depth;
  out.budget = budget;
  out.trials = trials;
  out.empirical_success_rate = static_cast<double>(winners) / trials;
  const double p_leaf = std::pow(2.0, 1 - depth);
  out.analytic_success_prob = 1.0 - std::pow(1.0 - p_leaf, budget);
  out.uniform_policy_value = policy_value(tree, family, uniform);

  std::ostringstream r;
  r << "# schema: epw-hardness v1\n";
  r << "depth: " << depth << "\n";
  r << "budget_episodes: " << budget << "\n";
  r << "trials: " << trials << "\n";
  r << "empirical_success_rate: " << fmt_double(out.empirical_success_rate) << "\n";
  r << "analytic_success_prob: " << fmt_double(out.analytic_success_prob) << "\n";
  r << "uniform_policy_value: " << fmt_double(out.uniform_policy_value) << "\n";
  out.report_text = r.str();
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir + "/hardness_report.txt", out.report_text);
  }
  return out;
}

}  // namespace epw
