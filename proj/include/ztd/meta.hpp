#pragma once

// First-order meta-learning of a trust threshold over a finite scenario
// sample, with an optional ascent step on scenario weights that turns the
// average-case objective into a worst-case one.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ztd/pomdp.hpp"
#include "ztd/random.hpp"
#include "ztd/spsa.hpp"

namespace ztd {

/// Noisy cost of threshold `tau` in scenario `theta`.
using ScenarioObjective = std::function<double(const Scenario& theta, double tau, Seed seed)>;

/// Monte Carlo objective: mean of `n_rollouts` rollouts under `config`.
ScenarioObjective mc_objective(PomdpConfig config, int n_rollouts);

struct ScenarioSet {
  std::vector<Scenario> scenarios;
  std::string provenance;

  std::size_t size() const noexcept { return scenarios.size(); }
  /// Throws InvalidArgument if empty or any scenario leaves the threshold regime.
  void validate() const;
};

enum class TrainingMode : std::uint8_t { Agnostic, Robust };

std::string_view mode_name(TrainingMode mode) noexcept;

struct AdaptResult {
  double tau_adapted = 0.0;
  double gradient = 0.0;
};

/// One projected SPSA step from `tau` in scenario `theta`.
AdaptResult adapt(const ScenarioObjective& objective, double tau, const Scenario& theta, double eta,
                  double gamma, Seed seed);

/// adapt() with the Monte Carlo objective.
AdaptResult adapt(double tau, const Scenario& theta, const PomdpConfig& config, double eta,
                  double gamma, int n_rollouts, Seed seed);

struct IterationRecord {
  int iter = 0;               ///< 1-based schedule index
  double tau_meta = 0.0;      ///< after this iteration's update
  double stop_metric = 0.0;   ///< max |pre-adaptation gradient| over the batch
  std::vector<std::size_t> batch;
  std::vector<double> pre_gradients;
  std::vector<double> adapted_taus;
  std::vector<double> post_gradients;
  std::vector<double> values;  ///< robust mode only
};

struct MetaTrainerState {
  double tau_meta = 0.5;
  int t = 0;  ///< completed iterations; the next one uses schedule index t + 1
  std::vector<double> weights;
  TrainingMode mode = TrainingMode::Agnostic;
  SpsaSchedule schedule;
  std::uint64_t master_seed = 0;
  int stop_streak = 0;
  std::vector<IterationRecord> history;
};

struct TrainOptions {
  TrainingMode mode = TrainingMode::Agnostic;
  int batch_size = 10;
  int max_iters = 5000;
  double tau_init = 0.5;
  /// Consecutive iterations the stopping rule must hold before stopping.
  int stop_window = 3;
  SpsaSchedule schedule;
  int jobs = 1;

  void validate() const;
};

struct TrainResult {
  double tau_meta = 0.0;
  bool converged = false;
  MetaTrainerState state;
};

MetaTrainerState initial_state(const ScenarioSet& set, const TrainOptions& options,
                               std::uint64_t master_seed);

/// Agnostic: uniform without replacement. Robust: i.i.d. from the current
/// weights with replacement.
std::vector<std::size_t> sample_batch(const MetaTrainerState& state, std::size_t set_size,
                                      int batch_size, Seed seed);

/// One iteration: for every batch entry, pre-adaptation SPSA at tau_meta,
/// projected adaptation, post-adaptation SPSA at the adapted threshold;
/// then the meta descent step on the mean post-adaptation gradient. In
/// robust mode the batch costs at the adapted thresholds drive an ascent
/// step on the scenario weights; in agnostic mode the weights are reset to
/// uniform. Appends to history and increments t.
MetaTrainerState foml_step(MetaTrainerState state, std::span<const std::size_t> batch,
                           const ScenarioSet& set, const ScenarioObjective& objective,
                           int jobs = 1);

/// Euclidean projection onto the probability simplex.
std::vector<double> simplex_project(std::span<const double> v);

struct IndexedValue {
  std::size_t index;
  double value;
};

/// weights[i] += beta * value for each entry, then simplex projection.
std::vector<double> sga_step(std::span<const double> weights, std::span<const IndexedValue> values,
                             double beta);

/// Runs foml_step until the stopping rule has held for `stop_window`
/// consecutive iterations or `max_iters` is reached. When not converged,
/// the last iterate is returned with converged = false.
TrainResult train(const ScenarioSet& set, const ScenarioObjective& objective,
                  const TrainOptions& options, std::uint64_t master_seed);

/// train() with the Monte Carlo objective.
TrainResult train(const ScenarioSet& set, const PomdpConfig& config, const TrainOptions& options,
                  int n_rollouts, std::uint64_t master_seed);

}  // namespace ztd
