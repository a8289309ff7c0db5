#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ztd/meta.hpp"
#include "ztd/pomdp.hpp"
#include "ztd/scenario_dist.hpp"
#include "ztd/spsa.hpp"

namespace ztd {

struct PolicyRow {
  std::string label;
  double mean_cost = 0.0;
  double std_dev = 0.0;
  int n_seeds = 0;
  int n_test_scenarios = 0;
};

/// Per-scenario averages over seeds for one policy.
struct DetailRow {
  std::string label;
  Scenario theta;
  double tau = 0.0;
  double cost = 0.0;
};

struct EvaluationReport {
  std::vector<PolicyRow> rows;
  std::vector<DetailRow> details;
  std::uint64_t master_seed = 0;
  std::string config_digest;
  std::optional<Scenario> worst_case_scenario;

  /// Throws InvalidArgument if no row carries `label`.
  const PolicyRow& row(std::string_view label) const;
};

struct ThresholdChoice {
  double tau = 0.0;
  double cost = 0.0;
};

/// Minimizes `objective` over {0, step, ..., 1}, then over a step/10 grid
/// within one step of the incumbent. Every point is evaluated with the same
/// seed. Ties go to the smallest threshold.
ThresholdChoice minimize_on_grid(const Objective& objective, double grid_step, Seed seed);

/// Single-scenario optimal threshold by grid search on Monte Carlo costs.
ThresholdChoice optimal_threshold(const Scenario& theta, const PomdpConfig& config,
                                  double grid_step, int n_rollouts, Seed seed);

/// Optimal threshold at the distribution's mean scenario.
ThresholdChoice avg_baseline_threshold(const ScenarioDistribution& dist, const PomdpConfig& config,
                                       double grid_step, int n_rollouts, Seed seed);

/// Threshold minimizing the average cost over `scenarios` (no adaptation).
ThresholdChoice expected_cost_threshold(const ScenarioSet& scenarios, const PomdpConfig& config,
                                        double grid_step, int n_rollouts, Seed seed);

/// Options shared by the evaluation routines. One-shot adaptation uses
/// eta = schedule.eta_at(1) and gamma = schedule.gamma.
struct EvalOptions {
  int n_seeds = 50;
  SpsaSchedule schedule;
  int jobs = 1;
};

/// Compares the one-shot adapted meta threshold with the fixed average
/// threshold over `test_set`. Each seed yields one test-set mean per
/// policy; rows report mean and sample standard deviation over seeds.
/// Labels: "meta", "avg".
EvaluationReport evaluate_policies(double tau_meta, double tau_avg, const ScenarioSet& test_set,
                                   const ScenarioObjective& objective, const EvalOptions& options,
                                   Seed seed);

struct SweepRow {
  double param_value = 0.0;
  double tau_mean = 0.0;
  double tau_std = 0.0;
};

/// One-shot adapted thresholds from tau_meta at each grid scenario.
std::vector<SweepRow> sweep_adapted_thresholds(double tau_meta, std::span<const Scenario> grid,
                                               ScenarioField field, const ScenarioObjective& objective,
                                               const SpsaSchedule& schedule, int n_repeats, Seed seed,
                                               int jobs = 1);

/// Single-scenario optimal thresholds at each grid scenario.
std::vector<SweepRow> sweep_optimal_thresholds(std::span<const Scenario> grid, ScenarioField field,
                                               const PomdpConfig& config, double grid_step,
                                               int n_rollouts, int n_repeats, Seed seed, int jobs = 1);

/// Evaluates the average, meta and robust thresholds under three scenario
/// weightings: the empirical test set ("empirical/..."), a point mass on
/// the training scenario with the highest cost under tau_avg
/// ("worst_case/..."), and the final ascent weights over the training set
/// ("sgda_weights/..."). Meta and robust are one-shot adapted.
EvaluationReport worst_case_report(double tau_meta, double tau_robust, double tau_avg,
                                   const ScenarioSet& training_set,
                                   std::span<const double> final_weights,
                                   const ScenarioSet& empirical_test_set,
                                   const ScenarioObjective& objective, const EvalOptions& options,
                                   Seed seed);

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either input is constant.
double spearman_correlation(std::span<const double> x, std::span<const double> y);

/// Evenly spaced grid of scenarios varying `field` over [lo, hi].
std::vector<Scenario> scenario_grid(const Scenario& base, ScenarioField field, double lo, double hi,
                                    int points);

}  // namespace ztd
