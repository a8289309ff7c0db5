#pragma once

// Shared generators for property tests.

#include <cstdint>
#include <vector>

#include "ztd/pomdp.hpp"
#include "ztd/random.hpp"

namespace ztd::testing {

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

/// Rejection-samples a scenario in the threshold regime.
inline Scenario random_valid_scenario(Rng& rng) {
  for (;;) {
    const Scenario s{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    if (in_threshold_regime(s)) return s;
  }
}

/// Random observation channel with q_a > q_u, costs in [0, 20], rho in [0.5, 0.95].
inline PomdpConfig random_config(Rng& rng, int horizon) {
  PomdpConfig c;
  c.q_a = uniform(rng, 0.55, 0.99);
  c.q_u = uniform(rng, 0.01, 0.45);
  for (auto& row : c.cost) {
    for (auto& x : row) x = uniform(rng, 0.0, 20.0);
  }
  c.rho = uniform(rng, 0.5, 0.95);
  c.horizon = horizon;
  c.b0_legit = uniform(rng, 0.05, 0.95);
  return c;
}

inline PomdpConfig zero_cost_config() {
  PomdpConfig c;
  c.cost = {{{0.0, 0.0}, {0.0, 0.0}}};
  return c;
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = uniform(rng, lo, hi);
  return v;
}

}  // namespace ztd::testing
