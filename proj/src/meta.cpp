#include "ztd/meta.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "ztd/error.hpp"
#include "ztd/parallel.hpp"

namespace ztd {

namespace {

// Seed lineage: master -> (train, iteration) -> {batch | (slot, j) -> purpose}.
constexpr std::uint64_t kTrainTag = 0x7472;
constexpr std::uint64_t kBatchTag = 1;
constexpr std::uint64_t kSlotTag = 2;
constexpr std::uint64_t kPreTag = 1;
constexpr std::uint64_t kPostTag = 2;
constexpr std::uint64_t kValueTag = 3;

Seed iteration_seed(std::uint64_t master, int iter) {
  return Seed{master}.child(kTrainTag, static_cast<std::uint64_t>(iter));
}

std::vector<double> uniform_weights(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

}  // namespace

ScenarioObjective mc_objective(PomdpConfig config, int n_rollouts) {
  config.validate();
  if (n_rollouts < 1) throw InvalidArgument("n_rollouts must be >= 1");
  return [config, n_rollouts](const Scenario& theta, double tau, Seed seed) {
    return mc_value_estimate(theta, config, ThresholdPolicy{tau}, n_rollouts, seed).mean;
  };
}

void ScenarioSet::validate() const {
  if (scenarios.empty()) throw InvalidArgument("scenario set is empty");
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (!in_threshold_regime(scenarios[i])) {
      throw InvalidArgument("scenario " + std::to_string(i) + " is outside the threshold regime");
    }
  }
}

std::string_view mode_name(TrainingMode mode) noexcept {
  return mode == TrainingMode::Robust ? "robust" : "agnostic";
}

AdaptResult adapt(const ScenarioObjective& objective, double tau, const Scenario& theta, double eta,
                  double gamma, Seed seed) {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument("tau must lie in [0,1]");
  const Objective scalar = [&](double x, Seed s) { return objective(theta, x, s); };
  AdaptResult out;
  out.gradient = spsa_gradient(scalar, tau, eta, seed);
  out.tau_adapted = project_unit_interval(tau - gamma * out.gradient);
  return out;
}

AdaptResult adapt(double tau, const Scenario& theta, const PomdpConfig& config, double eta,
                  double gamma, int n_rollouts, Seed seed) {
  return adapt(mc_objective(config, n_rollouts), tau, theta, eta, gamma, seed);
}

void TrainOptions::validate() const {
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (stop_window < 1) throw InvalidArgument("stop_window must be >= 1");
  if (!(tau_init >= 0.0 && tau_init <= 1.0)) throw InvalidArgument("tau_init must lie in [0,1]");
  schedule.validate();
}

MetaTrainerState initial_state(const ScenarioSet& set, const TrainOptions& options,
                               std::uint64_t master_seed) {
  MetaTrainerState state;
  state.tau_meta = options.tau_init;
  state.mode = options.mode;
  state.schedule = options.schedule;
  state.master_seed = master_seed;
  state.weights = uniform_weights(set.size());
  return state;
}

std::vector<std::size_t> sample_batch(const MetaTrainerState& state, std::size_t set_size,
                                      int batch_size, Seed seed) {
  if (batch_size < 1 || static_cast<std::size_t>(batch_size) > set_size) {
    throw InvalidArgument("batch_size must lie in [1, |scenario set|]");
  }
  Rng rng(seed);
  std::vector<std::size_t> batch;
  batch.reserve(static_cast<std::size_t>(batch_size));
  if (state.mode == TrainingMode::Robust) {
    std::discrete_distribution<std::size_t> pick(state.weights.begin(), state.weights.end());
    for (int j = 0; j < batch_size; ++j) batch.push_back(pick(rng));
    return batch;
  }
  // Partial Fisher-Yates.
  std::vector<std::size_t> pool(set_size);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (int j = 0; j < batch_size; ++j) {
    const auto remaining = set_size - static_cast<std::size_t>(j);
    const auto k = static_cast<std::size_t>(j) + static_cast<std::size_t>(rng() % remaining);
    std::swap(pool[static_cast<std::size_t>(j)], pool[k]);
    batch.push_back(pool[static_cast<std::size_t>(j)]);
  }
  return batch;
}

MetaTrainerState foml_step(MetaTrainerState state, std::span<const std::size_t> batch,
                           const ScenarioSet& set, const ScenarioObjective& objective, int jobs) {
  if (batch.empty()) throw InvalidArgument("batch must be nonempty");
  const int iter = state.t + 1;
  const double eta = state.schedule.eta_at(iter);
  const double gamma = state.schedule.gamma;
  const bool robust = state.mode == TrainingMode::Robust;
  const Seed seed = iteration_seed(state.master_seed, iter);

  IterationRecord rec;
  rec.iter = iter;
  rec.batch.assign(batch.begin(), batch.end());
  rec.pre_gradients.resize(batch.size());
  rec.adapted_taus.resize(batch.size());
  rec.post_gradients.resize(batch.size());
  if (robust) rec.values.resize(batch.size());

  const double tau = state.tau_meta;
  parallel_for(batch.size(), jobs, [&](std::size_t j) {
    const Scenario& theta = set.scenarios.at(batch[j]);
    const Seed slot = seed.child(kSlotTag, j);
    const AdaptResult adapted = adapt(objective, tau, theta, eta, gamma, slot.child(kPreTag));
    const Objective scalar = [&](double x, Seed s) { return objective(theta, x, s); };
    rec.pre_gradients[j] = adapted.gradient;
    rec.adapted_taus[j] = adapted.tau_adapted;
    rec.post_gradients[j] = spsa_gradient(scalar, adapted.tau_adapted, eta, slot.child(kPostTag));
    if (robust) rec.values[j] = objective(theta, adapted.tau_adapted, slot.child(kValueTag));
  });

  const double mean_grad =
      std::accumulate(rec.post_gradients.begin(), rec.post_gradients.end(), 0.0) /
      static_cast<double>(batch.size());
  state.tau_meta = project_unit_interval(tau - state.schedule.alpha_at(iter) * mean_grad);

  if (robust) {
    // Duplicate draws of one scenario contribute their mean cost once.
    std::map<std::size_t, std::pair<double, int>> acc;
    for (std::size_t j = 0; j < batch.size(); ++j) {
      auto& [sum, count] = acc[batch[j]];
      sum += rec.values[j];
      ++count;
    }
    std::vector<IndexedValue> values;
    values.reserve(acc.size());
    for (const auto& [idx, sc] : acc) values.push_back({idx, sc.first / sc.second});
    state.weights = sga_step(state.weights, values, state.schedule.beta_at(iter));
  } else {
    state.weights = uniform_weights(set.size());
  }

  rec.stop_metric = 0.0;
  for (double g : rec.pre_gradients) rec.stop_metric = std::max(rec.stop_metric, std::abs(g));
  rec.tau_meta = state.tau_meta;
  state.history.push_back(std::move(rec));
  state.t = iter;
  return state;
}

std::vector<double> simplex_project(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("cannot project an empty vector");
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0;
  double shift = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumsum += sorted[j];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) shift = candidate;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - shift, 0.0);
  return out;
}

std::vector<double> sga_step(std::span<const double> weights, std::span<const IndexedValue> values,
                             double beta) {
  std::vector<double> raw(weights.begin(), weights.end());
  for (const auto& [idx, value] : values) {
    if (idx >= raw.size()) throw InvalidArgument("scenario index out of range");
    if (!std::isfinite(value)) throw InvalidArgument("scenario value must be finite");
    raw[idx] += beta * value;
  }
  return simplex_project(raw);
}

TrainResult train(const ScenarioSet& set, const ScenarioObjective& objective,
                  const TrainOptions& options, std::uint64_t master_seed) {
  options.validate();
  set.validate();
  if (static_cast<std::size_t>(options.batch_size) > set.size()) {
    throw InvalidArgument("batch_size exceeds scenario set size");
  }
  TrainResult result;
  MetaTrainerState state = initial_state(set, options, master_seed);
  state.history.reserve(static_cast<std::size_t>(options.max_iters));
  while (state.t < options.max_iters) {
    const int iter = state.t + 1;
    const auto batch = sample_batch(state, set.size(), options.batch_size,
                                    iteration_seed(master_seed, iter).child(kBatchTag));
    state = foml_step(std::move(state), batch, set, objective, options.jobs);
    const bool holds = state.history.back().stop_metric <= state.schedule.epsilon;
    state.stop_streak = holds ? state.stop_streak + 1 : 0;
    if (state.stop_streak >= options.stop_window) {
      result.converged = true;
      break;
    }
  }
  result.tau_meta = state.tau_meta;
  result.state = std::move(state);
  return result;
}

TrainResult train(const ScenarioSet& set, const PomdpConfig& config, const TrainOptions& options,
                  int n_rollouts, std::uint64_t master_seed) {
  return train(set, mc_objective(config, n_rollouts), options, master_seed);
}

}  // namespace ztd
