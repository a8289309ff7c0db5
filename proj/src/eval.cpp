#include "ztd/eval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>

#include "ztd/error.hpp"
#include "ztd/parallel.hpp"

namespace ztd {

namespace {

constexpr std::uint64_t kAdaptTag = 1;
constexpr std::uint64_t kEvalTag = 2;
constexpr std::uint64_t kWorstCaseTag = 0x7763;

struct PolicySpec {
  std::string label;
  double tau;
  bool adaptive;
};

struct MeanStd {
  double mean = 0.0;
  double std_dev = 0.0;
};

MeanStd mean_std(std::span<const double> xs) {
  MeanStd out;
  if (xs.empty()) return out;
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std_dev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

std::uint64_t content_hash(const Scenario& theta) {
  return Seed{0}
      .child(std::bit_cast<std::uint64_t>(theta.p_a_d), std::bit_cast<std::uint64_t>(theta.p_u_d),
             std::bit_cast<std::uint64_t>(theta.p_a_n), std::bit_cast<std::uint64_t>(theta.p_u_n))
      .value();
}

// Noise streams keyed by scenario content and occurrence number, so a
// reordering of the same multiset reuses the same streams.
std::vector<Seed> scenario_seeds(std::span<const Scenario> scenarios, Seed parent) {
  std::map<std::uint64_t, std::uint64_t> seen;
  std::vector<Seed> out;
  out.reserve(scenarios.size());
  for (const auto& theta : scenarios) {
    const std::uint64_t h = content_hash(theta);
    out.push_back(parent.child(h, seen[h]++));
  }
  return out;
}

struct WeightedEvaluation {
  std::vector<PolicyRow> rows;
  std::vector<DetailRow> details;
};

WeightedEvaluation evaluate_weighted(std::span<const PolicySpec> policies,
                                     std::span<const Scenario> scenarios,
                                     std::span<const double> weights,
                                     const ScenarioObjective& objective, const EvalOptions& options,
                                     Seed seed, const std::string& prefix) {
  if (options.n_seeds < 1) throw InvalidArgument("n_seeds must be >= 1");
  if (scenarios.empty()) throw InvalidArgument("evaluation needs at least one scenario");
  const std::size_t n_seeds = static_cast<std::size_t>(options.n_seeds);
  const std::size_t n_scen = scenarios.size();
  const std::size_t n_pol = policies.size();
  const double eta = options.schedule.eta_at(1);
  const double gamma = options.schedule.gamma;

  std::vector<std::vector<Seed>> seeds;
  seeds.reserve(n_seeds);
  for (std::size_t r = 0; r < n_seeds; ++r) seeds.push_back(scenario_seeds(scenarios, seed.child(r)));

  // [r][i][p]
  std::vector<double> taus(n_seeds * n_scen * n_pol);
  std::vector<double> costs(n_seeds * n_scen * n_pol);
  parallel_for(n_seeds * n_scen, options.jobs, [&](std::size_t item) {
    const std::size_t r = item / n_scen;
    const std::size_t i = item % n_scen;
    const Seed s = seeds[r][i];
    for (std::size_t p = 0; p < n_pol; ++p) {
      double tau = policies[p].tau;
      if (policies[p].adaptive) {
        tau = adapt(objective, tau, scenarios[i], eta, gamma, s.child(kAdaptTag)).tau_adapted;
      }
      taus[item * n_pol + p] = tau;
      costs[item * n_pol + p] = objective(scenarios[i], tau, s.child(kEvalTag));
    }
  });

  WeightedEvaluation out;
  for (std::size_t p = 0; p < n_pol; ++p) {
    std::vector<double> per_seed(n_seeds, 0.0);
    for (std::size_t r = 0; r < n_seeds; ++r) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n_scen; ++i) acc += weights[i] * costs[(r * n_scen + i) * n_pol + p];
      per_seed[r] = acc;
    }
    const MeanStd ms = mean_std(per_seed);
    const std::string label = prefix + policies[p].label;
    out.rows.push_back({label, ms.mean, ms.std_dev, options.n_seeds, static_cast<int>(n_scen)});
    for (std::size_t i = 0; i < n_scen; ++i) {
      double tau_sum = 0.0;
      double cost_sum = 0.0;
      for (std::size_t r = 0; r < n_seeds; ++r) {
        tau_sum += taus[(r * n_scen + i) * n_pol + p];
        cost_sum += costs[(r * n_scen + i) * n_pol + p];
      }
      out.details.push_back({label, scenarios[i], tau_sum / static_cast<double>(n_seeds),
                             cost_sum / static_cast<double>(n_seeds)});
    }
  }
  return out;
}

}  // namespace

const PolicyRow& EvaluationReport::row(std::string_view label) const {
  for (const auto& r : rows) {
    if (r.label == label) return r;
  }
  throw InvalidArgument("no report row labelled " + std::string(label));
}

ThresholdChoice minimize_on_grid(const Objective& objective, double grid_step, Seed seed) {
  if (!(grid_step > 0.0 && grid_step <= 0.1)) throw InvalidArgument("grid_step must lie in (0, 0.1]");
  std::vector<std::pair<double, double>> evaluated;
  auto eval = [&](double tau) { evaluated.emplace_back(tau, objective(tau, seed)); };

  const auto n = static_cast<int>(std::floor(1.0 / grid_step + 1e-9));
  for (int i = 0; i <= n; ++i) eval(std::min(1.0, i * grid_step));
  if (n * grid_step < 1.0 - 1e-12) eval(1.0);

  auto best_of = [&] {
    auto sorted = evaluated;
    std::stable_sort(sorted.begin(), sorted.end(), [](auto a, auto b) { return a.first < b.first; });
    auto best = sorted.front();
    for (const auto& e : sorted) {
      if (e.second < best.second) best = e;
    }
    return best;
  };

  const double incumbent = best_of().first;
  const double fine = grid_step / 10.0;
  for (int j = -10; j <= 10; ++j) {
    if (j == 0 || j == -10 || j == 10) continue;  // already on the coarse grid
    const double tau = incumbent + j * fine;
    if (tau < 0.0 || tau > 1.0) continue;
    eval(tau);
  }
  const auto best = best_of();
  return {best.first, best.second};
}

ThresholdChoice optimal_threshold(const Scenario& theta, const PomdpConfig& config,
                                  double grid_step, int n_rollouts, Seed seed) {
  const Objective objective = [&](double tau, Seed s) {
    return mc_value_estimate(theta, config, ThresholdPolicy{tau}, n_rollouts, s).mean;
  };
  return minimize_on_grid(objective, grid_step, seed);
}

ThresholdChoice avg_baseline_threshold(const ScenarioDistribution& dist, const PomdpConfig& config,
                                       double grid_step, int n_rollouts, Seed seed) {
  return optimal_threshold(mean_scenario(dist), config, grid_step, n_rollouts, seed);
}

ThresholdChoice expected_cost_threshold(const ScenarioSet& scenarios, const PomdpConfig& config,
                                        double grid_step, int n_rollouts, Seed seed) {
  if (scenarios.scenarios.empty()) throw InvalidArgument("scenario set is empty");
  const Objective objective = [&](double tau, Seed s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      acc += mc_value_estimate(scenarios.scenarios[i], config, ThresholdPolicy{tau}, n_rollouts,
                               s.child(i))
                 .mean;
    }
    return acc / static_cast<double>(scenarios.size());
  };
  return minimize_on_grid(objective, grid_step, seed);
}

EvaluationReport evaluate_policies(double tau_meta, double tau_avg, const ScenarioSet& test_set,
                                   const ScenarioObjective& objective, const EvalOptions& options,
                                   Seed seed) {
  const PolicySpec policies[] = {{"meta", tau_meta, true}, {"avg", tau_avg, false}};
  const std::vector<double> weights(test_set.size(), 1.0 / static_cast<double>(test_set.size()));
  auto result = evaluate_weighted(policies, test_set.scenarios, weights, objective, options, seed, "");
  EvaluationReport report;
  report.rows = std::move(result.rows);
  report.details = std::move(result.details);
  report.master_seed = seed.value();
  return report;
}

std::vector<SweepRow> sweep_adapted_thresholds(double tau_meta, std::span<const Scenario> grid,
                                               ScenarioField field, const ScenarioObjective& objective,
                                               const SpsaSchedule& schedule, int n_repeats, Seed seed,
                                               int jobs) {
  if (n_repeats < 1) throw InvalidArgument("n_repeats must be >= 1");
  const auto reps = static_cast<std::size_t>(n_repeats);
  std::vector<double> taus(grid.size() * reps);
  parallel_for(taus.size(), jobs, [&](std::size_t item) {
    const std::size_t g = item / reps;
    const std::size_t r = item % reps;
    taus[item] = adapt(objective, tau_meta, grid[g], schedule.eta_at(1), schedule.gamma,
                       seed.child(g, r))
                     .tau_adapted;
  });
  std::vector<SweepRow> rows;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const MeanStd ms = mean_std(std::span<const double>(taus).subspan(g * reps, reps));
    rows.push_back({get(grid[g], field), ms.mean, ms.std_dev});
  }
  return rows;
}

std::vector<SweepRow> sweep_optimal_thresholds(std::span<const Scenario> grid, ScenarioField field,
                                               const PomdpConfig& config, double grid_step,
                                               int n_rollouts, int n_repeats, Seed seed, int jobs) {
  if (n_repeats < 1) throw InvalidArgument("n_repeats must be >= 1");
  const auto reps = static_cast<std::size_t>(n_repeats);
  std::vector<double> taus(grid.size() * reps);
  parallel_for(taus.size(), jobs, [&](std::size_t item) {
    const std::size_t g = item / reps;
    const std::size_t r = item % reps;
    taus[item] = optimal_threshold(grid[g], config, grid_step, n_rollouts, seed.child(g, r)).tau;
  });
  std::vector<SweepRow> rows;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const MeanStd ms = mean_std(std::span<const double>(taus).subspan(g * reps, reps));
    rows.push_back({get(grid[g], field), ms.mean, ms.std_dev});
  }
  return rows;
}

EvaluationReport worst_case_report(double tau_meta, double tau_robust, double tau_avg,
                                   const ScenarioSet& training_set,
                                   std::span<const double> final_weights,
                                   const ScenarioSet& empirical_test_set,
                                   const ScenarioObjective& objective, const EvalOptions& options,
                                   Seed seed) {
  if (final_weights.size() != training_set.size()) {
    throw InvalidArgument("final_weights must match the training set size");
  }
  if (training_set.scenarios.empty()) throw InvalidArgument("training set is empty");
  const PolicySpec policies[] = {
      {"avg", tau_avg, false}, {"meta", tau_meta, true}, {"robust", tau_robust, true}};

  // Worst case: costliest distinct training scenario under tau_avg, common noise.
  std::vector<Scenario> distinct;
  for (const auto& theta : training_set.scenarios) {
    if (std::find(distinct.begin(), distinct.end(), theta) == distinct.end()) distinct.push_back(theta);
  }
  std::vector<double> wc_costs(distinct.size());
  const Seed wc_seed = seed.child(kWorstCaseTag);
  parallel_for(distinct.size(), options.jobs,
               [&](std::size_t i) { wc_costs[i] = objective(distinct[i], tau_avg, wc_seed); });
  const auto worst = static_cast<std::size_t>(
      std::max_element(wc_costs.begin(), wc_costs.end()) - wc_costs.begin());

  EvaluationReport report;
  report.master_seed = seed.value();
  report.worst_case_scenario = distinct[worst];
  auto absorb = [&report](WeightedEvaluation&& ev) {
    for (auto& r : ev.rows) report.rows.push_back(std::move(r));
    for (auto& d : ev.details) report.details.push_back(std::move(d));
  };

  const std::vector<double> uniform(empirical_test_set.size(),
                                    1.0 / static_cast<double>(empirical_test_set.size()));
  absorb(evaluate_weighted(policies, empirical_test_set.scenarios, uniform, objective, options,
                           seed.child(1), "empirical/"));

  const Scenario point[] = {distinct[worst]};
  const double unit[] = {1.0};
  absorb(evaluate_weighted(policies, point, unit, objective, options, seed.child(2), "worst_case/"));

  std::vector<Scenario> support;
  std::vector<double> mass;
  for (std::size_t i = 0; i < final_weights.size(); ++i) {
    if (final_weights[i] > 0.0) {
      support.push_back(training_set.scenarios[i]);
      mass.push_back(final_weights[i]);
    }
  }
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  if (!(total > 0.0)) throw InvalidArgument("final_weights carry no mass");
  for (double& m : mass) m /= total;
  absorb(evaluate_weighted(policies, support, mass, objective, options, seed.child(3), "sgda_weights/"));
  return report;
}

double spearman_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("spearman inputs differ in length");
  const std::size_t n = x.size();
  auto ranks = [n](std::span<const double> v) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const MeanStd mx = mean_std(rx);
  const MeanStd my = mean_std(ry);
  if (mx.std_dev == 0.0 || my.std_dev == 0.0) return 0.0;
  double cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) cov += (rx[i] - mx.mean) * (ry[i] - my.mean);
  cov /= static_cast<double>(n - 1);
  return cov / (mx.std_dev * my.std_dev);
}

std::vector<Scenario> scenario_grid(const Scenario& base, ScenarioField field, double lo, double hi,
                                    int points) {
  if (points < 1) throw InvalidArgument("grid needs at least one point");
  std::vector<Scenario> grid;
  grid.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double x = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
    grid.push_back(with_field(base, field, x));
  }
  return grid;
}

}  // namespace ztd
