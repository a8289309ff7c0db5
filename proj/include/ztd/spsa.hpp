#pragma once

#include <functional>

#include "ztd/random.hpp"

namespace ztd {

/// Noisy cost of a threshold. The seed fixes the noise realization, so
/// calling twice with the same seed evaluates both points under common
/// random numbers.
using Objective = std::function<double(double tau, Seed seed)>;

constexpr double project_unit_interval(double x) noexcept {
  return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
}

/// value(t) = scale / (t + offset)^exponent, for t >= 1.
struct PowerLawSchedule {
  double scale = 1.0;
  double offset = 0.0;
  double exponent = 0.0;

  double operator()(int t) const;
  bool operator==(const PowerLawSchedule&) const = default;
};

/// Step-size and perturbation schedules for meta training.
struct SpsaSchedule {
  PowerLawSchedule eta{0.4, 0.0, 0.2};
  PowerLawSchedule alpha{0.017, 50.0, 0.602};
  PowerLawSchedule beta{0.017, 50.0, 0.602};
  double gamma = 0.005;
  double epsilon = 1e-3;

  double eta_at(int t) const { return eta(t); }
  double alpha_at(int t) const { return alpha(t); }
  double beta_at(int t) const { return beta(t); }

  bool operator==(const SpsaSchedule&) const = default;

  /// Throws InvalidArgument unless every schedule is positive for t >= 1,
  /// eta is nonincreasing, and gamma, epsilon > 0.
  void validate() const;
};

/// Two-point SPSA estimate with a fixed direction d in {+1, -1}. Both
/// projected points are evaluated with `eval_seed`; the denominator is
/// the nominal 2*eta*d even when projection clips a point.
double spsa_gradient(const Objective& objective, double tau, double eta, int direction,
                     Seed eval_seed);

/// Draws d uniformly from {+1, -1} using `seed`, then evaluates with a
/// child of `seed`.
double spsa_gradient(const Objective& objective, double tau, double eta, Seed seed);

}  // namespace ztd
