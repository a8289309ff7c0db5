#include "ztd/spsa.hpp"

#include <cmath>

#include "ztd/error.hpp"

namespace ztd {

namespace {
constexpr std::uint64_t kDirectionTag = 1;
constexpr std::uint64_t kEvaluationTag = 2;
}  // namespace

double PowerLawSchedule::operator()(int t) const {
  return scale / std::pow(static_cast<double>(t) + offset, exponent);
}

void SpsaSchedule::validate() const {
  auto check = [](const PowerLawSchedule& s, const char* name) {
    if (!(s.scale > 0.0) || !std::isfinite(s.scale)) {
      throw InvalidArgument(std::string(name) + ".scale must be positive");
    }
    if (!(1.0 + s.offset > 0.0)) {
      throw InvalidArgument(std::string(name) + ".offset must exceed -1");
    }
    if (!std::isfinite(s.exponent)) throw InvalidArgument(std::string(name) + ".exponent must be finite");
  };
  check(eta, "eta");
  check(alpha, "alpha");
  check(beta, "beta");
  if (eta.exponent < 0.0) throw InvalidArgument("eta.exponent must be >= 0 (nonincreasing)");
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
}

double spsa_gradient(const Objective& objective, double tau, double eta, int direction,
                     Seed eval_seed) {
  if (!(eta > 0.0)) throw InvalidArgument("eta must be positive");
  if (direction != 1 && direction != -1) throw InvalidArgument("direction must be +1 or -1");
  const double d = static_cast<double>(direction);
  const double tau_plus = project_unit_interval(tau + eta * d);
  const double tau_minus = project_unit_interval(tau - eta * d);
  const double u_plus = objective(tau_plus, eval_seed);
  const double u_minus = objective(tau_minus, eval_seed);
  return (u_plus - u_minus) / (2.0 * eta * d);
}

double spsa_gradient(const Objective& objective, double tau, double eta, Seed seed) {
  Rng rng(seed.child(kDirectionTag));
  const int d = (rng() >> 63) != 0 ? 1 : -1;
  return spsa_gradient(objective, tau, eta, d, seed.child(kEvaluationTag));
}

}  // namespace ztd
