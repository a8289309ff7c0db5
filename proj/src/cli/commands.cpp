#include "ztd/cli/commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ztd/cli/config.hpp"
#include "ztd/cli/report.hpp"
#include "ztd/error.hpp"
#include "ztd/eval.hpp"
#include "ztd/meta.hpp"

namespace ztd::cli {

using nlohmann::json;

namespace {

// Children of the master seed, one per pipeline stage.
enum SeedTag : std::uint64_t {
  kTrainingSet = 1,
  kTrainAgnostic = 2,
  kTrainRobust = 3,
  kAvgBaseline = 4,
  kTestSet = 5,
  kEvaluate = 6,
  kSweep = 7,
  kWorstCase = 8,
  kAdapt = 9,
};

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "JSON config file (omit for defaults)");
  cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
  cmd->add_option("--out", c.out, "output directory (overrides the config)");
  cmd->add_option("--jobs", c.jobs, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
}

RunConfig resolve(const Common& c) {
  RunConfig config = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  if (c.seed) config.master_seed = *c.seed;
  if (c.out) config.output_dir = *c.out;
  if (c.jobs) config.jobs = *c.jobs;
  validate(config);
  return config;
}

Seed master(const RunConfig& c) { return Seed{c.master_seed}; }

// Output files are named <command>-<digest prefix>[.<variant>].<suffix>.
class Outputs {
 public:
  Outputs(const RunConfig& config, std::string command, std::string variant = {})
      : dir_(config.output_dir),
        stem_(command + "-" + config_digest(config).substr(0, 16) + (variant.empty() ? "" : "." + variant)),
        command_(std::move(command)),
        digest_(config_digest(config)) {}

  const std::string& digest() const { return digest_; }

  void write(const std::string& suffix, const std::string& contents) {
    const std::string name = stem_ + "." + suffix;
    write_file((std::filesystem::path(dir_) / name).string(), contents);
    files_.push_back(name);
  }

  void manifest(const RunConfig& config, json seeds, json results, std::ostream& out) {
    const std::string name = stem_ + ".manifest.json";
    json m{{"command", command_},
           {"config_digest", digest_},
           {"master_seed", config.master_seed},
           {"seeds", std::move(seeds)},
           {"config", to_json(config)},
           {"results", std::move(results)},
           {"outputs", files_},
           {"created_at", utc_timestamp()}};
    write_file((std::filesystem::path(dir_) / name).string(), m.dump(2) + "\n");
    for (const auto& f : files_) out << (std::filesystem::path(dir_) / f).string() << "\n";
    out << (std::filesystem::path(dir_) / name).string() << "\n";
  }

 private:
  std::string dir_;
  std::string stem_;
  std::string command_;
  std::string digest_;
  std::vector<std::string> files_;
};

TrainOptions train_options(const RunConfig& c, TrainingMode mode) {
  TrainOptions o;
  o.mode = mode;
  o.batch_size = c.training.batch_size;
  o.max_iters = c.training.max_iters;
  o.tau_init = c.training.tau_init;
  o.stop_window = c.training.stop_window;
  o.schedule = c.training.schedule;
  o.jobs = c.jobs;
  return o;
}

EvalOptions eval_options(const RunConfig& c) {
  EvalOptions o;
  o.n_seeds = c.evaluation.n_seeds;
  o.schedule = c.training.schedule;
  o.jobs = c.jobs;
  return o;
}

ScenarioSet training_set(const RunConfig& c, const ScenarioDistribution& dist) {
  return sample_scenarios(dist, c.training.n_scenarios, master(c).child(kTrainingSet));
}

TrainResult run_training(const RunConfig& c, const ScenarioSet& set, TrainingMode mode) {
  const auto tag = mode == TrainingMode::Robust ? kTrainRobust : kTrainAgnostic;
  return train(set, mc_objective(c.pomdp, c.training.n_rollouts), train_options(c, mode),
               master(c).child(tag).value());
}

json policy_json(const RunConfig& c, const TrainResult& r, const ScenarioSet& set,
                 const std::string& digest) {
  return json{{"tau_meta", r.tau_meta},
              {"mode", std::string(mode_name(r.state.mode))},
              {"converged", r.converged},
              {"iterations", r.state.t},
              {"config_digest", digest},
              {"master_seed", c.master_seed},
              {"provenance", set.provenance}};
}

json seed_entry(const RunConfig& c, SeedTag tag) { return master(c).child(tag).value(); }

int cmd_train(const Common& common, TrainingMode mode, std::ostream& out) {
  RunConfig c = resolve(common);
  c.training.mode = mode;
  const std::string command = mode == TrainingMode::Robust ? "train-robust" : "train";
  Outputs files(c, command);

  const auto dist = build_distribution(c);
  const ScenarioSet set = training_set(c, dist);
  const TrainResult r = run_training(c, set, mode);

  files.write("history.csv", history_csv(r.state));
  files.write("scenarios.csv", scenarios_csv(set, r.state.weights));
  files.write("policy.json", policy_json(c, r, set, files.digest()).dump(2) + "\n");
  const auto tag = mode == TrainingMode::Robust ? kTrainRobust : kTrainAgnostic;
  files.manifest(c, {{"training_set", seed_entry(c, kTrainingSet)}, {"train", seed_entry(c, tag)}},
                 {{"tau_meta", r.tau_meta}, {"converged", r.converged}, {"iterations", r.state.t}},
                 out);
  out << "tau_meta=" << format_double(r.tau_meta) << " converged=" << (r.converged ? 1 : 0)
      << " iterations=" << r.state.t << "\n";
  return r.converged ? kOk : kNotConverged;
}

Scenario parse_theta(const std::string& text) {
  std::vector<double> v;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string part = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw ValidationError("theta", "expected four comma-separated numbers");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (v.size() != 4) throw ValidationError("theta", "expected four comma-separated numbers");
  const Scenario theta{v[0], v[1], v[2], v[3]};
  validate(theta);
  if (!in_threshold_regime(theta)) throw ValidationError("theta", "outside the threshold regime");
  return theta;
}

int cmd_adapt(const Common& common, double tau, const std::string& scenario, const std::string& theta_text,
              std::ostream& out) {
  const RunConfig c = resolve(common);
  Scenario theta;
  if (!theta_text.empty()) {
    theta = parse_theta(theta_text);
  } else if (scenario == "baseline") {
    theta = Scenario{};
  } else if (scenario == "mean") {
    theta = mean_scenario(build_distribution(c));
  } else {
    throw ValidationError("scenario", "expected 'baseline' or 'mean' (or pass --theta)");
  }
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau", "must lie in [0,1]");
  const auto r = adapt(tau, theta, c.pomdp, c.training.schedule.eta_at(1), c.training.schedule.gamma,
                       c.training.n_rollouts, master(c).child(kAdapt));
  out << "tau_adapted=" << format_double(r.tau_adapted) << "\n";
  out << "gradient=" << format_double(r.gradient) << "\n";
  return kOk;
}

struct EvalFlags {
  std::string policy;
  bool with_robust = false;
};

int cmd_eval(const Common& common, const EvalFlags& flags, std::ostream& out) {
  const RunConfig c = resolve(common);
  Outputs files(c, "eval");
  const auto dist = build_distribution(c);
  const auto objective = mc_objective(c.pomdp, c.evaluation.n_rollouts);
  const EvalOptions options = eval_options(c);
  json seeds{{"avg_baseline", seed_entry(c, kAvgBaseline)},
             {"test_set", seed_entry(c, kTestSet)},
             {"evaluate", seed_entry(c, kEvaluate)}};
  json results;
  int code = kOk;

  const ScenarioSet set = training_set(c, dist);
  double tau_meta = 0.0;
  if (!flags.policy.empty()) {
    tau_meta = read_policy_tau(flags.policy);
    results["policy_file"] = flags.policy;
  } else {
    const TrainResult r = run_training(c, set, TrainingMode::Agnostic);
    tau_meta = r.tau_meta;
    seeds["training_set"] = seed_entry(c, kTrainingSet);
    seeds["train"] = seed_entry(c, kTrainAgnostic);
    results["converged"] = r.converged;
    results["iterations"] = r.state.t;
    files.write("history.csv", history_csv(r.state));
    files.write("policy.json", policy_json(c, r, set, files.digest()).dump(2) + "\n");
    if (!r.converged) code = kNotConverged;
  }

  const auto avg = avg_baseline_threshold(dist, c.pomdp, c.evaluation.grid_step,
                                          c.evaluation.baseline_rollouts, master(c).child(kAvgBaseline));
  const ScenarioSet test = sample_scenarios(dist, c.evaluation.test_size, master(c).child(kTestSet));
  EvaluationReport report =
      evaluate_policies(tau_meta, avg.tau, test, objective, options, master(c).child(kEvaluate));
  results["tau_meta"] = tau_meta;
  results["tau_avg"] = avg.tau;

  if (c.evaluation.expected_cost_baseline) {
    const auto exp = expected_cost_threshold(set, c.pomdp, c.evaluation.grid_step, c.evaluation.n_rollouts,
                                             master(c).child(kAvgBaseline).child(1));
    const auto extra =
        evaluate_policies(tau_meta, exp.tau, test, objective, options, master(c).child(kEvaluate));
    for (const auto& row : extra.rows) {
      if (row.label == "avg") report.rows.push_back({"avg_expected", row.mean_cost, row.std_dev, row.n_seeds,
                                                     row.n_test_scenarios});
    }
    for (const auto& d : extra.details) {
      if (d.label == "avg") report.details.push_back({"avg_expected", d.theta, d.tau, d.cost});
    }
    results["tau_avg_expected"] = exp.tau;
  }
  files.write("table.csv", table_csv(report.rows));
  files.write("detail.csv", detail_csv(report.details));

  if (flags.with_robust) {
    const TrainResult robust = run_training(c, set, TrainingMode::Robust);
    seeds["training_set"] = seed_entry(c, kTrainingSet);
    seeds["train_robust"] = seed_entry(c, kTrainRobust);
    seeds["worst_case"] = seed_entry(c, kWorstCase);
    const auto wc = worst_case_report(tau_meta, robust.tau_meta, avg.tau, set, robust.state.weights, test,
                                      objective, options, master(c).child(kWorstCase));
    files.write("worst_case.csv", table_csv(wc.rows));
    files.write("robust_history.csv", history_csv(robust.state));
    files.write("robust_scenarios.csv", scenarios_csv(set, robust.state.weights));
    results["tau_robust"] = robust.tau_meta;
    results["robust_converged"] = robust.converged;
    if (wc.worst_case_scenario) {
      const auto& s = *wc.worst_case_scenario;
      results["worst_case_scenario"] = {s.p_a_d, s.p_u_d, s.p_a_n, s.p_u_n};
    }
    if (!robust.converged) code = kNotConverged;
  }

  files.manifest(c, seeds, results, out);
  for (const auto& row : report.rows) {
    out << row.label << " mean_cost=" << format_double(row.mean_cost)
        << " std_dev=" << format_double(row.std_dev) << "\n";
  }
  return code;
}

struct SweepFlags {
  std::string kind = "adapted";
  std::string field;
  std::optional<double> lo;
  std::optional<double> hi;
  std::optional<int> points;
  std::optional<double> tau;
  std::string policy;
};

int cmd_sweep(const Common& common, const SweepFlags& flags, std::ostream& out) {
  const RunConfig c = resolve(common);
  if (flags.kind != "adapted" && flags.kind != "optimal") {
    throw ValidationError("kind", "expected 'adapted' or 'optimal'");
  }
  ScenarioField field = c.scenario_dist.field;
  if (!flags.field.empty()) {
    const auto f = parse_field(flags.field);
    if (!f) throw ValidationError("field", "expected one of p_a_d, p_u_d, p_a_n, p_u_n");
    field = *f;
  }
  const bool same_field = field == c.scenario_dist.field;
  const double lo = flags.lo.value_or(same_field ? c.scenario_dist.lo : get(c.scenario_dist.base, field));
  const double hi = flags.hi.value_or(same_field ? c.scenario_dist.hi : get(c.scenario_dist.base, field));
  const int points = flags.points.value_or(c.evaluation.sweep_points);
  if (!(lo <= hi)) throw ValidationError("hi", "must be >= lo");
  if (points < 1) throw ValidationError("points", "must be >= 1");
  const auto grid = scenario_grid(c.scenario_dist.base, field, lo, hi, points);
  for (const auto& s : grid) {
    if (!in_threshold_regime(s)) throw ValidationError("hi", "sweep grid leaves the threshold regime");
  }

  Outputs files(c, "sweep", flags.kind + "-" + std::string(field_name(field)));
  json seeds{{"sweep", seed_entry(c, kSweep)}};
  json results{{"kind", flags.kind},
               {"field", std::string(field_name(field))},
               {"lo", lo},
               {"hi", hi},
               {"points", points},
               {"repeats", c.evaluation.sweep_repeats}};
  int code = kOk;
  std::vector<SweepRow> rows;
  if (flags.kind == "optimal") {
    rows = sweep_optimal_thresholds(grid, field, c.pomdp, c.evaluation.grid_step, c.evaluation.baseline_rollouts,
                                    c.evaluation.sweep_repeats, master(c).child(kSweep), c.jobs);
  } else {
    double tau_meta = 0.0;
    if (flags.tau) {
      tau_meta = *flags.tau;
      if (!(tau_meta >= 0.0 && tau_meta <= 1.0)) throw ValidationError("tau", "must lie in [0,1]");
    } else if (!flags.policy.empty()) {
      tau_meta = read_policy_tau(flags.policy);
    } else {
      const auto dist = build_distribution(c);
      const ScenarioSet set = training_set(c, dist);
      const TrainResult r = run_training(c, set, TrainingMode::Agnostic);
      tau_meta = r.tau_meta;
      seeds["training_set"] = seed_entry(c, kTrainingSet);
      seeds["train"] = seed_entry(c, kTrainAgnostic);
      results["converged"] = r.converged;
      if (!r.converged) code = kNotConverged;
    }
    results["tau_meta"] = tau_meta;
    rows = sweep_adapted_thresholds(tau_meta, grid, field, mc_objective(c.pomdp, c.evaluation.n_rollouts),
                                    c.training.schedule, c.evaluation.sweep_repeats, master(c).child(kSweep),
                                    c.jobs);
  }
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& r : rows) {
    xs.push_back(r.param_value);
    ys.push_back(r.tau_mean);
  }
  results["spearman"] = spearman_correlation(xs, ys);
  files.write("sweep.csv", sweep_csv(rows));
  files.manifest(c, seeds, results, out);
  out << "spearman=" << format_double(results["spearman"].get<double>()) << "\n";
  return code;
}

struct IngestFlags {
  std::string input;
  std::string field;
  std::optional<double> lo;
  std::optional<double> hi;
};

int cmd_ingest(const Common& common, const IngestFlags& flags, std::ostream& out) {
  RunConfig c = resolve(common);
  auto& d = c.scenario_dist;
  d.family = DistFamily::Histogram;
  d.histogram_path = std::filesystem::absolute(flags.input).lexically_normal().string();
  if (!flags.field.empty()) {
    const auto f = parse_field(flags.field);
    if (!f) throw ValidationError("field", "expected one of p_a_d, p_u_d, p_a_n, p_u_n");
    d.field = *f;
  }
  if (flags.lo) d.lo = *flags.lo;
  if (flags.hi) d.hi = *flags.hi;
  validate(c);

  const auto dist = std::get<EmpiricalScenarioDist>(build_distribution(c));
  Outputs files(c, "ingest");
  files.write("support.csv", support_csv(dist, d.field));
  const Scenario mean = mean_scenario(dist);
  files.manifest(c, json::object(),
                 {{"support_points", dist.support.size()},
                  {"mean", get(mean, d.field)},
                  {"source", dist.source}},
                 out);
  out << "support_points=" << dist.support.size() << " mean=" << format_double(get(mean, d.field)) << "\n";
  return kOk;
}

std::string one_line(std::string s) {
  for (auto& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trust-threshold meta-learning for zero-trust account defense", "ztd"};
  app.require_subcommand(1);

  Common common;
  auto* train_cmd = app.add_subcommand("train", "meta-train a threshold on sampled scenarios");
  add_common(train_cmd, common);
  auto* robust_cmd = app.add_subcommand("train-robust", "meta-train with adversarial scenario weights");
  add_common(robust_cmd, common);

  double adapt_tau = 0.0;
  std::string adapt_scenario = "baseline";
  std::string adapt_theta;
  auto* adapt_cmd = app.add_subcommand("adapt", "one-shot adaptation of a threshold in one scenario");
  add_common(adapt_cmd, common);
  adapt_cmd->add_option("--tau", adapt_tau, "threshold to adapt")->required();
  auto* scen_opt = adapt_cmd->add_option("--scenario", adapt_scenario, "named scenario: baseline | mean");
  adapt_cmd->add_option("--theta", adapt_theta, "explicit scenario p_a_d,p_u_d,p_a_n,p_u_n")->excludes(scen_opt);

  EvalFlags eval_flags;
  auto* eval_cmd = app.add_subcommand("eval", "compare meta and average thresholds on a fresh test set");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--policy", eval_flags.policy, "policy file from train (skips training)");
  eval_cmd->add_flag("--with-robust", eval_flags.with_robust, "also train robustly and write the worst-case table");

  SweepFlags sweep_flags;
  auto* sweep_cmd = app.add_subcommand("sweep", "thresholds along one scenario parameter");
  add_common(sweep_cmd, common);
  sweep_cmd->add_option("--kind", sweep_flags.kind, "adapted | optimal")->check(CLI::IsMember({"adapted", "optimal"}));
  sweep_cmd->add_option("--field", sweep_flags.field, "scenario field to vary");
  sweep_cmd->add_option("--lo", sweep_flags.lo, "grid start");
  sweep_cmd->add_option("--hi", sweep_flags.hi, "grid end");
  sweep_cmd->add_option("--points", sweep_flags.points, "grid size");
  auto* tau_opt = sweep_cmd->add_option("--tau", sweep_flags.tau, "meta threshold for --kind adapted");
  sweep_cmd->add_option("--policy", sweep_flags.policy, "policy file for --kind adapted")->excludes(tau_opt);

  IngestFlags ingest_flags;
  auto* ingest_cmd = app.add_subcommand("ingest-histogram", "map a technique-count histogram to scenarios");
  add_common(ingest_cmd, common);
  ingest_cmd->add_option("--input", ingest_flags.input, "CSV with header group_id,technique_count")->required();
  ingest_cmd->add_option("--field", ingest_flags.field, "scenario field to map onto");
  ingest_cmd->add_option("--lo", ingest_flags.lo, "value for the smallest count");
  ingest_cmd->add_option("--hi", ingest_flags.hi, "value for the largest count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error kind=Usage message=" << one_line(e.what()) << "\n";
    return kError;
  }

  try {
    if (*train_cmd) return cmd_train(common, TrainingMode::Agnostic, out);
    if (*robust_cmd) return cmd_train(common, TrainingMode::Robust, out);
    if (*adapt_cmd) return cmd_adapt(common, adapt_tau, adapt_scenario, adapt_theta, out);
    if (*eval_cmd) return cmd_eval(common, eval_flags, out);
    if (*sweep_cmd) return cmd_sweep(common, sweep_flags, out);
    if (*ingest_cmd) return cmd_ingest(common, ingest_flags, out);
  } catch (const Error& e) {
    err << "error kind=" << e.kind() << " message=" << one_line(e.what()) << "\n";
    return kError;
  } catch (const std::exception& e) {
    err << "error kind=Error message=" << one_line(e.what()) << "\n";
    return kError;
  }
  return kError;
}

}  // namespace ztd::cli
