#include "ztd/pomdp.hpp"

#include <cmath>
#include <string>

#include "ztd/error.hpp"

namespace ztd {

namespace {

bool is_probability(double x) noexcept { return x >= 0.0 && x <= 1.0; }

// Posterior trust score after acting with transition `t` and observing
// column `o` of `obs`. Returns a negative value when o is impossible.
inline double posterior_ts(double ts, const Matrix2& t, const Matrix2& obs, int o) noexcept {
  const double pred_adv = (1.0 - ts) * t[0][0] + ts * t[1][0];
  const double pred_legit = (1.0 - ts) * t[0][1] + ts * t[1][1];
  const double num = obs[1][o] * pred_legit;
  const double den = obs[0][o] * pred_adv + num;
  if (!(den > 0.0)) return -1.0;
  return num / den;
}

// Everything a rollout needs, resolved once per scenario.
struct Model {
  std::array<Matrix2, 2> trans;
  Matrix2 obs;
  Matrix2 cost;
  double rho;
  int horizon;
  double b0;

  Model(const Scenario& theta, const PomdpConfig& config)
      : trans{transition_matrix(theta, Action::Reset), transition_matrix(theta, Action::Continue)},
        obs(observation_matrix(config)),
        cost(config.cost),
        rho(config.rho),
        horizon(config.horizon),
        b0(config.b0_legit) {}
};

double simulate(const Model& m, double tau, Rng& rng, std::vector<TrajectoryStep>* trajectory) {
  int s = rng.bernoulli(m.b0) ? 1 : 0;
  double ts = m.b0;
  double discount = 1.0;
  double total = 0.0;
  for (int k = 0; k < m.horizon; ++k) {
    const int a = tau < ts ? 1 : 0;
    total += discount * m.cost[s][a];
    discount *= m.rho;
    const bool last = k + 1 == m.horizon;
    if (trajectory) {
      trajectory->push_back({static_cast<State>(s), static_cast<Action>(a), ts, std::nullopt});
    }
    if (last) break;
    const Matrix2& t = m.trans[a];
    s = rng.uniform() < t[s][0] ? 0 : 1;
    const int o = rng.uniform() < m.obs[s][0] ? 0 : 1;
    ts = posterior_ts(ts, t, m.obs, o);
    if (ts < 0.0) throw ZeroLikelihood("observation has zero predictive probability during rollout");
    if (trajectory) trajectory->back().next_observation = static_cast<Observation>(o);
  }
  return total;
}

}  // namespace

std::string_view field_name(ScenarioField f) noexcept {
  switch (f) {
    case ScenarioField::PaD: return "p_a_d";
    case ScenarioField::PuD: return "p_u_d";
    case ScenarioField::PaN: return "p_a_n";
    case ScenarioField::PuN: return "p_u_n";
  }
  return "?";
}

std::optional<ScenarioField> parse_field(std::string_view name) noexcept {
  for (auto f : {ScenarioField::PaD, ScenarioField::PuD, ScenarioField::PaN, ScenarioField::PuN}) {
    if (field_name(f) == name) return f;
  }
  return std::nullopt;
}

double get(const Scenario& theta, ScenarioField f) noexcept {
  switch (f) {
    case ScenarioField::PaD: return theta.p_a_d;
    case ScenarioField::PuD: return theta.p_u_d;
    case ScenarioField::PaN: return theta.p_a_n;
    case ScenarioField::PuN: return theta.p_u_n;
  }
  return 0.0;
}

Scenario with_field(Scenario theta, ScenarioField f, double value) noexcept {
  switch (f) {
    case ScenarioField::PaD: theta.p_a_d = value; break;
    case ScenarioField::PuD: theta.p_u_d = value; break;
    case ScenarioField::PaN: theta.p_a_n = value; break;
    case ScenarioField::PuN: theta.p_u_n = value; break;
  }
  return theta;
}

void validate(const Scenario& theta) {
  for (auto f : {ScenarioField::PaD, ScenarioField::PuD, ScenarioField::PaN, ScenarioField::PuN}) {
    if (!is_probability(get(theta, f))) {
      throw InvalidArgument(std::string(field_name(f)) + " must lie in [0,1]");
    }
  }
}

bool in_threshold_regime(const Scenario& theta, double tol) noexcept {
  if (!is_probability(theta.p_a_d) || !is_probability(theta.p_u_d) ||
      !is_probability(theta.p_a_n) || !is_probability(theta.p_u_n)) {
    return false;
  }
  const double bound = std::min(theta.p_a_n, theta.p_a_n - theta.p_a_d + theta.p_u_d);
  return theta.p_u_n <= bound + tol;
}

void PomdpConfig::validate() const {
  if (!is_probability(q_a)) throw InvalidArgument("q_a must lie in [0,1]");
  if (!is_probability(q_u)) throw InvalidArgument("q_u must lie in [0,1]");
  if (!is_probability(b0_legit)) throw InvalidArgument("b0_legit must lie in [0,1]");
  if (!(rho > 0.0 && rho < 1.0)) throw InvalidArgument("rho must lie in (0,1)");
  if (horizon < 1) throw InvalidArgument("horizon must be >= 1");
  for (const auto& row : cost) {
    for (double c : row) {
      if (!std::isfinite(c)) throw InvalidArgument("cost entries must be finite");
    }
  }
}

Matrix2 transition_matrix(const Scenario& theta, Action a) noexcept {
  if (a == Action::Reset) {
    return {{{theta.p_a_d, 1.0 - theta.p_a_d}, {theta.p_u_d, 1.0 - theta.p_u_d}}};
  }
  return {{{theta.p_a_n, 1.0 - theta.p_a_n}, {theta.p_u_n, 1.0 - theta.p_u_n}}};
}

Matrix2 observation_matrix(const PomdpConfig& config) noexcept {
  return {{{config.q_a, 1.0 - config.q_a}, {config.q_u, 1.0 - config.q_u}}};
}

Belief belief_update(Belief b, Action a, Observation o, const Scenario& theta,
                     const PomdpConfig& config) {
  const double ts = posterior_ts(b.ts, transition_matrix(theta, a), observation_matrix(config), index(o));
  if (ts < 0.0) throw ZeroLikelihood("observation has zero predictive probability");
  return Belief{ts};
}

RolloutRecord rollout(const Scenario& theta, const PomdpConfig& config, ThresholdPolicy pi,
                      Seed seed, bool record_trajectory) {
  const Model model(theta, config);
  Rng rng(seed);
  RolloutRecord record;
  if (record_trajectory) record.trajectory.reserve(static_cast<std::size_t>(config.horizon));
  record.discounted_cost =
      simulate(model, pi.tau, rng, record_trajectory ? &record.trajectory : nullptr);
  return record;
}

ValueEstimate mc_value_estimate(const Scenario& theta, const PomdpConfig& config,
                                ThresholdPolicy pi, int n_rollouts, Seed seed) {
  if (n_rollouts < 1) throw InvalidArgument("n_rollouts must be >= 1");
  const Model model(theta, config);
  // Welford: identical samples keep the mean exact and M2 at zero.
  double mean = 0.0;
  double m2 = 0.0;
  for (int i = 0; i < n_rollouts; ++i) {
    Rng rng(seed.child(static_cast<std::uint64_t>(i)));
    const double x = simulate(model, pi.tau, rng, nullptr);
    const double delta = x - mean;
    mean += delta / (i + 1);
    m2 += delta * (x - mean);
  }
  ValueEstimate est;
  est.mean = mean;
  est.n = n_rollouts;
  if (n_rollouts > 1) {
    est.std_error = std::sqrt(m2 / (n_rollouts - 1) / n_rollouts);
  }
  return est;
}

namespace {

struct PathEnumerator {
  const Model& m;
  double tau;
  int horizon;
  double total = 0.0;

  void visit(int k, int s, double ts, double prob, double discount) {
    const int a = tau < ts ? 1 : 0;
    total += prob * discount * m.cost[s][a];
    if (k + 1 == horizon) return;
    const Matrix2& t = m.trans[a];
    for (int o = 0; o < 2; ++o) {
      // The posterior depends on the observation only, not the hidden successor.
      double next_ts = -1.0;
      for (int s_next = 0; s_next < 2; ++s_next) {
        const double p = prob * t[s][s_next] * m.obs[s_next][o];
        if (p == 0.0) continue;
        if (next_ts < 0.0) {
          next_ts = posterior_ts(ts, t, m.obs, o);
          if (next_ts < 0.0) throw ZeroLikelihood("zero-likelihood observation on a live path");
        }
        visit(k + 1, s_next, next_ts, p, discount * m.rho);
      }
    }
  }
};

}  // namespace

double exact_value(const Scenario& theta, const PomdpConfig& config, ThresholdPolicy pi,
                   int horizon, std::uint64_t path_budget) {
  if (horizon < 1) throw InvalidArgument("horizon must be >= 1");
  // 2 * 4^(H-1) leaves; compare in log space to avoid overflow.
  const double log2_paths = 1.0 + 2.0 * (horizon - 1);
  if (log2_paths > std::log2(static_cast<double>(path_budget))) {
    throw HorizonTooLarge("horizon " + std::to_string(horizon) + " exceeds path budget");
  }
  PomdpConfig cfg = config;
  cfg.horizon = horizon;
  const Model model(theta, cfg);
  PathEnumerator walker{model, pi.tau, horizon};
  if (model.b0 < 1.0) walker.visit(0, 0, model.b0, 1.0 - model.b0, 1.0);
  if (model.b0 > 0.0) walker.visit(0, 1, model.b0, model.b0, 1.0);
  return walker.total;
}

}  // namespace ztd
