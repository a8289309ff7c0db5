#pragma once

// Two-state account take-over POMDP: scenario-parameterized transitions,
// an alert-driven observation channel, the Bayesian trust filter and
// threshold policies over the resulting trust score.

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "ztd/random.hpp"

namespace ztd {

enum class State : std::uint8_t { Adversarial = 0, Legitimate = 1 };
enum class Action : std::uint8_t { Reset = 0, Continue = 1 };
enum class Observation : std::uint8_t { Alert = 0, NoAlert = 1 };

constexpr int index(State s) noexcept { return static_cast<int>(s); }
constexpr int index(Action a) noexcept { return static_cast<int>(a); }
constexpr int index(Observation o) noexcept { return static_cast<int>(o); }

/// Row-major 2x2 matrix; m[i][j].
using Matrix2 = std::array<std::array<double, 2>, 2>;

/// Attack scenario: the four transition probabilities.
struct Scenario {
  double p_a_d = 0.2;  ///< attacker survives a reset
  double p_u_d = 0.1;  ///< legitimate account compromised during a reset
  double p_a_n = 0.8;  ///< attacker persists undetected in normal operation
  double p_u_n = 0.5;  ///< legitimate account taken over in normal operation

  bool operator==(const Scenario&) const = default;
};

enum class ScenarioField : std::uint8_t { PaD, PuD, PaN, PuN };

std::string_view field_name(ScenarioField f) noexcept;
std::optional<ScenarioField> parse_field(std::string_view name) noexcept;
double get(const Scenario& theta, ScenarioField f) noexcept;
Scenario with_field(Scenario theta, ScenarioField f, double value) noexcept;

/// Throws InvalidArgument unless every field is a probability.
void validate(const Scenario& theta);

/// True when every field is a probability and
/// p_u_n <= min(p_a_n, p_a_n - p_a_d + p_u_d), the regime in which the
/// optimal policy has threshold form.
bool in_threshold_regime(const Scenario& theta, double tol = 1e-12) noexcept;

struct PomdpConfig {
  double q_a = 0.9;  ///< detection rate, P(alert | adversarial)
  double q_u = 0.1;  ///< false alarm rate, P(alert | legitimate)
  /// cost[s][a]
  Matrix2 cost{{{10.0, 15.0}, {3.0, 0.0}}};
  double rho = 0.86;
  int horizon = 100;
  double b0_legit = 0.5;

  bool operator==(const PomdpConfig&) const = default;

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
};

/// Belief over {adversarial, legitimate}, stored as the trust score.
struct Belief {
  double ts = 0.5;

  constexpr double legitimate() const noexcept { return ts; }
  constexpr double adversarial() const noexcept { return 1.0 - ts; }
};

struct ThresholdPolicy {
  double tau = 0.5;
};

/// T(a)[s][s'].
Matrix2 transition_matrix(const Scenario& theta, Action a) noexcept;

/// O[s][o]. The alert channel does not depend on the action.
Matrix2 observation_matrix(const PomdpConfig& config) noexcept;

/// Predictive step through T(a) followed by Bayes' rule on o.
/// Throws ZeroLikelihood when o has zero predictive probability.
Belief belief_update(Belief b, Action a, Observation o, const Scenario& theta,
                     const PomdpConfig& config);

/// Continue iff tau < ts; ties reset.
constexpr Action policy_act(ThresholdPolicy pi, double ts) noexcept {
  return pi.tau < ts ? Action::Continue : Action::Reset;
}

struct TrajectoryStep {
  State state;
  Action action;
  double ts;  ///< trust score the action was chosen from
  /// Alert emitted by the successor state; empty on the final step.
  std::optional<Observation> next_observation;
};

struct RolloutRecord {
  double discounted_cost = 0.0;
  std::vector<TrajectoryStep> trajectory;
};

/// One sampled trajectory of length config.horizon with s^0 ~ b^0.
RolloutRecord rollout(const Scenario& theta, const PomdpConfig& config, ThresholdPolicy pi,
                      Seed seed, bool record_trajectory = false);

struct ValueEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int n = 0;
};

/// Mean and standard error of n_rollouts rollouts. Rollout i draws from
/// seed.child(i), so results do not depend on evaluation order.
ValueEstimate mc_value_estimate(const Scenario& theta, const PomdpConfig& config,
                                ThresholdPolicy pi, int n_rollouts, Seed seed);

/// Default cap on enumerated state/observation paths for exact_value.
inline constexpr std::uint64_t kDefaultPathBudget = std::uint64_t{1} << 24;

/// Exact expected discounted cost over `horizon` steps by enumerating
/// every (state, observation) path. Throws HorizonTooLarge when the path
/// count 2*4^(horizon-1) exceeds `path_budget`.
double exact_value(const Scenario& theta, const PomdpConfig& config, ThresholdPolicy pi,
                   int horizon, std::uint64_t path_budget = kDefaultPathBudget);

}  // namespace ztd
