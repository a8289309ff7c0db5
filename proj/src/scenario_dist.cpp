#include "ztd/scenario_dist.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <random>

#include "ztd/error.hpp"

namespace ztd {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Threshold-regime constraints are linear in each field, so validity on a
// segment follows from validity at its endpoints.
void check_support(double lo, double hi, ScenarioField field, const Scenario& base) {
  if (!in_threshold_regime(with_field(base, field, lo)) ||
      !in_threshold_regime(with_field(base, field, hi))) {
    throw InvalidArgument("support [" + std::to_string(lo) + ", " + std::to_string(hi) + "] for " +
                          std::string(field_name(field)) + " leaves the threshold regime");
  }
}

double draw_beta(Rng& rng, double alpha, double beta) {
  std::gamma_distribution<double> ga(alpha, 1.0);
  std::gamma_distribution<double> gb(beta, 1.0);
  for (;;) {
    const double x = ga(rng);
    const double y = gb(rng);
    if (x + y > 0.0) return x / (x + y);
  }
}

}  // namespace

ScaledBeta make_scaled_beta(double lo, double hi, double alpha, double beta, ScenarioField field,
                            const Scenario& base) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw InvalidArgument("beta shapes must be positive");
  if (!(lo < hi)) throw InvalidArgument("support requires lo < hi");
  validate(base);
  check_support(lo, hi, field, base);
  return ScaledBeta{lo, hi, alpha, beta, field, base};
}

ScaledBeta scaled_beta_from_mean(double lo, double hi, double mean, double concentration,
                                 ScenarioField field, const Scenario& base) {
  if (!(lo < mean && mean < hi)) {
    throw MeanOutOfSupport("mean " + std::to_string(mean) + " outside (" + std::to_string(lo) +
                           ", " + std::to_string(hi) + ")");
  }
  if (!(concentration > 0.0)) throw InvalidArgument("concentration must be positive");
  const double mu = (mean - lo) / (hi - lo);
  return make_scaled_beta(lo, hi, concentration * mu, concentration * (1.0 - mu), field, base);
}

void EmpiricalScenarioDist::validate() const {
  if (support.empty()) throw InvalidArgument("empirical distribution has empty support");
  if (support.size() != weights.size()) throw InvalidArgument("support and weights differ in length");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgument("weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("weights must sum to 1");
  for (const auto& s : support) {
    if (!in_threshold_regime(s)) throw InvalidArgument("support point outside the threshold regime");
  }
}

Scenario mean_scenario(const ScenarioDistribution& dist) {
  if (const auto* sb = std::get_if<ScaledBeta>(&dist)) {
    return with_field(sb->base, sb->field, sb->mean());
  }
  const auto& emp = std::get<EmpiricalScenarioDist>(dist);
  emp.validate();
  Scenario out{0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < emp.support.size(); ++i) {
    const double w = emp.weights[i];
    out.p_a_d += w * emp.support[i].p_a_d;
    out.p_u_d += w * emp.support[i].p_u_d;
    out.p_a_n += w * emp.support[i].p_a_n;
    out.p_u_n += w * emp.support[i].p_u_n;
  }
  return out;
}

ScenarioSet sample_scenarios(const ScenarioDistribution& dist, int n, Seed seed, int max_retries) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  Rng rng(seed);
  ScenarioSet set;
  set.scenarios.reserve(static_cast<std::size_t>(n));

  std::function<Scenario()> draw;
  std::discrete_distribution<std::size_t> pick;
  if (const auto* sb = std::get_if<ScaledBeta>(&dist)) {
    set.provenance = "scaled_beta field=" + std::string(field_name(sb->field)) +
                     " lo=" + std::to_string(sb->lo) + " hi=" + std::to_string(sb->hi) +
                     " alpha=" + std::to_string(sb->alpha) + " beta=" + std::to_string(sb->beta);
    draw = [&rng, sb] {
      return with_field(sb->base, sb->field, sb->lo + (sb->hi - sb->lo) * draw_beta(rng, sb->alpha, sb->beta));
    };
  } else {
    const auto& emp = std::get<EmpiricalScenarioDist>(dist);
    emp.validate();
    set.provenance = "empirical " + emp.source;
    pick = std::discrete_distribution<std::size_t>(emp.weights.begin(), emp.weights.end());
    draw = [&rng, &pick, &emp] { return emp.support[pick(rng)]; };
  }

  for (int i = 0; i < n; ++i) {
    int rejected = 0;
    Scenario theta = draw();
    while (!in_threshold_regime(theta)) {
      if (++rejected > max_retries) {
        throw ValidityExhausted("more than " + std::to_string(max_retries) + " invalid draws");
      }
      theta = draw();
    }
    set.scenarios.push_back(theta);
  }
  return set;
}

std::vector<HistogramRow> read_histogram_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("histogram CSV is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (trim(line) != "group_id,technique_count") {
    throw ParseError("histogram CSV header must be 'group_id,technique_count'");
  }
  std::vector<HistogramRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw ParseError("line " + std::to_string(lineno) + ": expected two columns");
    }
    HistogramRow row;
    row.group_id = trim(line.substr(0, comma));
    const std::string count = trim(line.substr(comma + 1));
    const auto* end = count.data() + count.size();
    const auto [ptr, ec] = std::from_chars(count.data(), end, row.technique_count);
    if (ec != std::errc{} || ptr != end) {
      throw ParseError("line " + std::to_string(lineno) + ": technique_count is not an integer");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<HistogramRow> read_histogram_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open histogram file " + path);
  return read_histogram_csv(in);
}

EmpiricalScenarioDist ingest_histogram(std::span<const HistogramRow> rows, ScenarioField field,
                                       double lo, double hi, const Scenario& base) {
  std::map<long long, int> groups_per_count;
  for (const auto& row : rows) {
    if (row.technique_count < 0) {
      throw NegativeCount("group " + row.group_id + " has a negative technique count");
    }
    ++groups_per_count[row.technique_count];
  }
  if (groups_per_count.size() < 2) {
    throw DegenerateHistogram("histogram needs at least two distinct technique counts");
  }
  if (!(lo < hi)) throw InvalidArgument("support requires lo < hi");
  validate(base);
  check_support(lo, hi, field, base);

  const double c_min = static_cast<double>(groups_per_count.begin()->first);
  const double c_max = static_cast<double>(groups_per_count.rbegin()->first);
  EmpiricalScenarioDist dist;
  dist.source = "histogram groups=" + std::to_string(rows.size()) + " field=" +
                std::string(field_name(field));
  for (const auto& [count, groups] : groups_per_count) {
    const double x = (static_cast<double>(count) - c_min) / (c_max - c_min);
    dist.support.push_back(with_field(base, field, lo + (hi - lo) * x));
    dist.weights.push_back(static_cast<double>(groups) / static_cast<double>(rows.size()));
  }
  return dist;
}

}  // namespace ztd
