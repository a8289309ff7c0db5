#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ztd/meta.hpp"
#include "ztd/pomdp.hpp"
#include "ztd/random.hpp"

namespace ztd {

/// Beta(alpha, beta) rescaled to [lo, hi] on one scenario field; the other
/// fields come from `base`.
struct ScaledBeta {
  double lo = 0.0;
  double hi = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
  ScenarioField field = ScenarioField::PuN;
  Scenario base;

  double mean() const noexcept { return lo + (hi - lo) * alpha / (alpha + beta); }
};

/// Validates shapes, lo < hi, and that every point of [lo, hi] keeps the
/// scenario in the threshold regime.
ScaledBeta make_scaled_beta(double lo, double hi, double alpha, double beta, ScenarioField field,
                            const Scenario& base);

/// Shapes alpha = k*mu, beta = k*(1-mu) with mu the normalized mean.
/// Throws MeanOutOfSupport unless lo < mean < hi.
ScaledBeta scaled_beta_from_mean(double lo, double hi, double mean, double concentration,
                                 ScenarioField field, const Scenario& base);

/// Finite weighted support of scenarios.
struct EmpiricalScenarioDist {
  std::vector<Scenario> support;
  std::vector<double> weights;
  std::string source;

  void validate() const;
};

using ScenarioDistribution = std::variant<ScaledBeta, EmpiricalScenarioDist>;

/// Scenario at the distribution's mean; for an empirical distribution each
/// field is the weighted average over the support.
Scenario mean_scenario(const ScenarioDistribution& dist);

inline constexpr int kDefaultMaxRetries = 1000;

/// n i.i.d. draws. Draws outside the threshold regime are redrawn; more
/// than `max_retries` consecutive rejections throws ValidityExhausted.
ScenarioSet sample_scenarios(const ScenarioDistribution& dist, int n, Seed seed,
                             int max_retries = kDefaultMaxRetries);

struct HistogramRow {
  std::string group_id;
  long long technique_count = 0;
};

/// Reads `group_id,technique_count` CSV (header required).
std::vector<HistogramRow> read_histogram_csv(std::istream& in);
std::vector<HistogramRow> read_histogram_csv(const std::string& path);

/// Maps technique counts affinely onto [lo, hi] (min count -> lo, max
/// count -> hi) for `field`, weighting each distinct count by the number
/// of groups that report it.
EmpiricalScenarioDist ingest_histogram(std::span<const HistogramRow> rows, ScenarioField field,
                                       double lo, double hi, const Scenario& base);

}  // namespace ztd
