#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "support.hpp"
#include "ztd/error.hpp"
#include "ztd/scenario_dist.hpp"

using namespace ztd;
using namespace ztd::testing;

namespace {

double field_mean(const ScenarioSet& set, ScenarioField f) {
  double s = 0.0;
  for (const auto& th : set.scenarios) s += get(th, f);
  return s / static_cast<double>(set.size());
}

std::vector<HistogramRow> rows_from(std::initializer_list<std::pair<int, int>> count_groups) {
  std::vector<HistogramRow> rows;
  int id = 0;
  for (const auto& [count, groups] : count_groups) {
    for (int g = 0; g < groups; ++g) rows.push_back({"G" + std::to_string(id++), count});
  }
  return rows;
}

}  // namespace

TEST_CASE("shapes from mean and concentration") {
  const Scenario base;
  const auto mid = scaled_beta_from_mean(0.0, 0.7, 0.35, 10.0, ScenarioField::PuN, base);
  CHECK(mid.alpha == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(mid.beta == doctest::Approx(5.0).epsilon(1e-14));

  const auto low = scaled_beta_from_mean(0.0, 0.7, 0.05, 10.0, ScenarioField::PuN, base);
  CHECK(low.alpha == doctest::Approx(10.0 / 14.0).epsilon(1e-14));
  CHECK(low.beta == doctest::Approx(10.0 - 10.0 / 14.0).epsilon(1e-14));
  CHECK(low.mean() == doctest::Approx(0.05).epsilon(1e-14));

  const auto stealth = scaled_beta_from_mean(0.6, 1.0, 0.8, 10.0, ScenarioField::PaN, base);
  CHECK(stealth.alpha == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(stealth.beta == doctest::Approx(5.0).epsilon(1e-14));

  for (double m : {0.05, 0.15, 0.35, 0.55, 0.65}) {
    CHECK(scaled_beta_from_mean(0.0, 0.7, m, 10.0, ScenarioField::PuN, base).mean() ==
          doctest::Approx(m).epsilon(1e-14));
  }

  CHECK_THROWS_AS(scaled_beta_from_mean(0.0, 0.7, 0.7, 10.0, ScenarioField::PuN, base), MeanOutOfSupport);
  CHECK_THROWS_AS(scaled_beta_from_mean(0.0, 0.7, -0.1, 10.0, ScenarioField::PuN, base), MeanOutOfSupport);
  CHECK_THROWS_AS(scaled_beta_from_mean(0.0, 0.7, 0.3, 0.0, ScenarioField::PuN, base), InvalidArgument);
  // p_u_n up to 0.9 exceeds p_a_n - p_a_d + p_u_d = 0.7.
  CHECK_THROWS_AS(make_scaled_beta(0.0, 0.9, 2.0, 2.0, ScenarioField::PuN, base), InvalidArgument);
}

TEST_CASE("sampling from a scaled beta") {
  const Scenario base;
  const auto dist = scaled_beta_from_mean(0.0, 0.7, 0.35, 10.0, ScenarioField::PuN, base);
  const auto set = sample_scenarios(dist, 5000, Seed{1});
  for (const auto& th : set.scenarios) {
    REQUIRE(th.p_u_n >= 0.0);
    REQUIRE(th.p_u_n <= 0.7);
    REQUIRE(th.p_a_d == base.p_a_d);
    REQUIRE(th.p_u_d == base.p_u_d);
    REQUIRE(th.p_a_n == base.p_a_n);
    REQUIRE(in_threshold_regime(th));
  }
  const auto again = sample_scenarios(dist, 5000, Seed{1});
  CHECK(again.scenarios == set.scenarios);
  CHECK_FALSE(set.provenance.empty());
}

TEST_CASE("sample means converge at the Monte Carlo rate") {
  const Scenario base;
  for (double m : {0.05, 0.55}) {
    const auto dist = scaled_beta_from_mean(0.0, 0.7, m, 10.0, ScenarioField::PuN, base);
    const double var = (0.7 * 0.7) * dist.alpha * dist.beta /
                       ((dist.alpha + dist.beta) * (dist.alpha + dist.beta) * (dist.alpha + dist.beta + 1.0));
    for (int n : {10000, 1000000}) {
      const double err = std::abs(field_mean(sample_scenarios(dist, n, Seed{static_cast<std::uint64_t>(n)}),
                                             ScenarioField::PuN) -
                                  m);
      CHECK(err <= 4.0 * std::sqrt(var / n));
      if (n == 1000000) CHECK(err <= 0.002);
    }
  }
}

TEST_CASE("empirical distributions") {
  const Scenario point{0.2, 0.1, 0.8, 0.3};
  const EmpiricalScenarioDist single{{point}, {1.0}, "point"};
  for (const auto& th : sample_scenarios(single, 100, Seed{2}).scenarios) CHECK(th == point);

  const EmpiricalScenarioDist two{{with_field(point, ScenarioField::PuN, 0.2), with_field(point, ScenarioField::PuN, 0.6)},
                                  {0.5, 0.5},
                                  "two"};
  CHECK(mean_scenario(two).p_u_n == doctest::Approx(0.4));
  const auto draws = sample_scenarios(two, 20000, Seed{3});
  CHECK(field_mean(draws, ScenarioField::PuN) == doctest::Approx(0.4).epsilon(0.02));

  const EmpiricalScenarioDist bad{{point}, {0.5}, "bad"};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("invalid draws are redrawn, then give up") {
  const Scenario base;
  // Built without make_scaled_beta, so part of the support is invalid.
  const ScaledBeta straddling{0.0, 0.9, 2.0, 2.0, ScenarioField::PuN, base};
  for (const auto& th : sample_scenarios(straddling, 2000, Seed{5}).scenarios) REQUIRE(in_threshold_regime(th));

  const ScaledBeta outside{0.75, 0.9, 2.0, 2.0, ScenarioField::PuN, base};
  CHECK_THROWS_AS(sample_scenarios(outside, 1, Seed{5}), ValidityExhausted);
  CHECK_THROWS_AS(sample_scenarios(outside, 1, Seed{5}, 3), ValidityExhausted);

  const EmpiricalScenarioDist invalid{{Scenario{0.2, 0.1, 0.8, 0.75}}, {1.0}, "invalid"};
  CHECK_THROWS_AS(sample_scenarios(invalid, 1, Seed{1}), InvalidArgument);
}

TEST_CASE("histogram ingestion examples") {
  const Scenario base;
  const auto two = ingest_histogram(rows_from({{10, 1}, {20, 1}}), ScenarioField::PaN, 0.6, 1.0, base);
  REQUIRE(two.support.size() == 2);
  CHECK(two.support[0].p_a_n == doctest::Approx(0.6));
  CHECK(two.support[1].p_a_n == doctest::Approx(1.0));
  CHECK(two.weights == std::vector<double>{0.5, 0.5});

  const auto skewed = ingest_histogram(rows_from({{10, 3}, {20, 1}}), ScenarioField::PaN, 0.6, 1.0, base);
  CHECK(skewed.weights == std::vector<double>{0.75, 0.25});

  // Five bins: counts 2, 4, 7, 12, 22 with 1, 3, 5, 2, 1 groups (12 groups).
  // Support: 0.6 + 0.4 * (c - 2) / 20 = 0.6, 0.64, 0.7, 0.8, 1.0.
  const auto five = ingest_histogram(rows_from({{7, 5}, {2, 1}, {22, 1}, {4, 3}, {12, 2}}),
                                     ScenarioField::PaN, 0.6, 1.0, base);
  const std::vector<double> support{0.6, 0.64, 0.7, 0.8, 1.0};
  const std::vector<double> weights{1.0 / 12, 3.0 / 12, 5.0 / 12, 2.0 / 12, 1.0 / 12};
  REQUIRE(five.support.size() == 5);
  double total = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(five.support[i].p_a_n == doctest::Approx(support[i]).epsilon(1e-14));
    CHECK(five.weights[i] == doctest::Approx(weights[i]).epsilon(1e-14));
    CHECK(five.support[i].p_u_n == base.p_u_n);
    total += five.weights[i];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_NOTHROW(five.validate());
}

TEST_CASE("histogram ingestion properties") {
  Rng rng(Seed{8});
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<HistogramRow> rows;
    const int n = 2 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) rows.push_back({"g" + std::to_string(i), static_cast<long long>(rng() % 50)});
    rows.push_back({"lo", 0});
    rows.push_back({"hi", 60});
    const auto d = ingest_histogram(rows, ScenarioField::PaN, 0.6, 1.0, Scenario{});
    double total = 0.0;
    for (std::size_t i = 0; i < d.support.size(); ++i) {
      total += d.weights[i];
      REQUIRE(d.weights[i] > 0.0);
      if (i > 0) REQUIRE(d.support[i].p_a_n > d.support[i - 1].p_a_n);
    }
    REQUIRE(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("histogram errors") {
  const Scenario base;
  CHECK_THROWS_AS(ingest_histogram(rows_from({{5, 4}}), ScenarioField::PaN, 0.6, 1.0, base), DegenerateHistogram);
  std::vector<HistogramRow> neg{{"a", 1}, {"b", -2}};
  CHECK_THROWS_AS(ingest_histogram(neg, ScenarioField::PaN, 0.6, 1.0, base), NegativeCount);
  CHECK_THROWS_AS(ingest_histogram(rows_from({{1, 1}, {2, 1}}), ScenarioField::PaN, 0.3, 1.0, base), InvalidArgument);
}

TEST_CASE("histogram CSV parsing") {
  std::istringstream good("\xEF\xBB\xBFgroup_id,technique_count\nAPT1,12\nAPT2 , 3\n\nFIN7,40\n");
  const auto rows = read_histogram_csv(good);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].group_id == "APT2");
  CHECK(rows[1].technique_count == 3);

  std::istringstream header("group,count\nA,1\n");
  CHECK_THROWS_AS(read_histogram_csv(header), ParseError);
  std::istringstream number("group_id,technique_count\nA,1.5\n");
  CHECK_THROWS_AS(read_histogram_csv(number), ParseError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_histogram_csv(empty), ParseError);
  CHECK_THROWS_AS(read_histogram_csv(std::string("/nonexistent/h.csv")), ParseError);
}
