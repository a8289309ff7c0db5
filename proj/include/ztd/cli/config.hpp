#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ztd/meta.hpp"
#include "ztd/pomdp.hpp"
#include "ztd/scenario_dist.hpp"
#include "ztd/spsa.hpp"

namespace ztd::cli {

enum class DistFamily : std::uint8_t { ScaledBeta, Histogram };

struct ScenarioDistConfig {
  DistFamily family = DistFamily::ScaledBeta;
  ScenarioField field = ScenarioField::PuN;
  double lo = 0.0;
  double hi = 0.7;
  double mean = 0.35;
  double concentration = 10.0;
  Scenario base;
  /// Histogram family only. Relative paths resolve against the config file.
  std::string histogram_path;

  bool operator==(const ScenarioDistConfig&) const = default;
};

struct TrainingConfig {
  TrainingMode mode = TrainingMode::Agnostic;
  int batch_size = 10;
  int n_scenarios = 1000;
  int max_iters = 5000;
  double tau_init = 0.5;
  int stop_window = 3;
  int n_rollouts = 100;
  SpsaSchedule schedule;

  bool operator==(const TrainingConfig&) const = default;
};

struct EvaluationConfig {
  int n_seeds = 50;
  int test_size = 100;
  double grid_step = 0.01;
  int n_rollouts = 100;
  /// Rollouts per grid point when searching the average-scenario threshold.
  int baseline_rollouts = 500;
  int sweep_points = 13;
  int sweep_repeats = 20;
  /// Also report the threshold minimizing the average cost over sampled scenarios.
  bool expected_cost_baseline = false;

  bool operator==(const EvaluationConfig&) const = default;
};

struct RunConfig {
  PomdpConfig pomdp;
  ScenarioDistConfig scenario_dist;
  TrainingConfig training;
  EvaluationConfig evaluation;
  std::uint64_t master_seed = 1;
  std::string output_dir = "out";
  int jobs = 1;

  bool operator==(const RunConfig&) const = default;
};

/// Parses JSON text; omitted fields keep their defaults, unknown keys are
/// rejected. Throws ParseError on malformed JSON and ValidationError on
/// bad values. `base_dir` anchors a relative histogram path.
RunConfig parse_config(std::string_view text, const std::string& base_dir = ".");

/// Reads and parses a config file. Empty files yield the defaults.
RunConfig load_config(const std::string& path);

/// Range checks shared by parse_config and the CLI flag overrides.
void validate(const RunConfig& config);

nlohmann::json to_json(const RunConfig& config);
std::string serialize_config(const RunConfig& config);

/// SHA-256 over the canonical JSON of every field that affects results
/// (output_dir and jobs excluded), as lowercase hex.
std::string config_digest(const RunConfig& config);

/// Scenario distribution described by the config; reads the histogram file
/// for the histogram family.
ScenarioDistribution build_distribution(const RunConfig& config);

}  // namespace ztd::cli
