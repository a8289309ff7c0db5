#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "ztd/error.hpp"
#include "ztd/eval.hpp"

using namespace ztd;
using namespace ztd::testing;

namespace {

const ScenarioObjective zero_objective = [](const Scenario&, double, Seed) { return 0.0; };

// Exact-value argmin set on a 0.001 grid; returns the distance from tau to it.
double distance_to_exact_argmin(const Scenario& th, const PomdpConfig& c, int horizon, double tau) {
  std::vector<double> values;
  for (int i = 0; i <= 1000; ++i) values.push_back(exact_value(th, c, ThresholdPolicy{i / 1000.0}, horizon));
  const double best = *std::min_element(values.begin(), values.end());
  double dist = 1.0;
  for (int i = 0; i <= 1000; ++i) {
    if (values[static_cast<std::size_t>(i)] <= best + 1e-12) dist = std::min(dist, std::abs(tau - i / 1000.0));
  }
  return dist;
}

}  // namespace

TEST_CASE("grid minimization") {
  SUBCASE("flat objective ties to zero") {
    const auto r = minimize_on_grid([](double, Seed) { return 0.0; }, 0.01, Seed{1});
    CHECK(r.tau == 0.0);
    CHECK(r.cost == 0.0);
  }
  SUBCASE("refinement finds the off-grid minimizer") {
    const auto r = minimize_on_grid([](double t, Seed) { return (t - 0.537) * (t - 0.537); }, 0.01, Seed{1});
    CHECK(r.tau == doctest::Approx(0.537).epsilon(1e-9));
  }
  SUBCASE("step objective picks the left edge of the plateau") {
    const auto r = minimize_on_grid([](double t, Seed) { return t < 0.4213 ? 1.0 : 0.0; }, 0.01, Seed{1});
    CHECK(r.tau == doctest::Approx(0.422).epsilon(1e-9));
  }
  SUBCASE("every evaluation shares the seed") {
    std::vector<std::uint64_t> seeds;
    minimize_on_grid([&](double, Seed s) { seeds.push_back(s.value()); return 1.0; }, 0.05, Seed{99});
    CHECK(std::all_of(seeds.begin(), seeds.end(), [](auto v) { return v == 99; }));
  }
  CHECK_THROWS_AS(minimize_on_grid([](double, Seed) { return 0.0; }, 0.0, Seed{1}), InvalidArgument);
  CHECK_THROWS_AS(minimize_on_grid([](double, Seed) { return 0.0; }, 0.2, Seed{1}), InvalidArgument);
}

TEST_CASE("optimal threshold examples") {
  const auto zero = optimal_threshold(Scenario{}, zero_cost_config(), 0.01, 20, Seed{1});
  CHECK(zero.tau == 0.0);
  CHECK(zero.cost == 0.0);

  // Resetting always costs 100 more and both actions move the state alike.
  PomdpConfig dominated;
  dominated.cost = {{{100.0, 0.0}, {100.0, 0.0}}};
  const Scenario same{0.5, 0.2, 0.5, 0.2};
  CHECK(optimal_threshold(same, dominated, 0.01, 50, Seed{2}).tau == 0.0);

  PomdpConfig c;
  c.horizon = 6;
  const auto r = optimal_threshold(Scenario{}, c, 0.01, 4000, Seed{3});
  CHECK(distance_to_exact_argmin(Scenario{}, c, 6, r.tau) <= 0.01 + 1e-12);
  CHECK(optimal_threshold(Scenario{}, c, 0.01, 4000, Seed{3}).tau == r.tau);
}

TEST_CASE("optimal threshold agrees with the exact grid on random scenarios") {
  Rng rng(Seed{50});
  int agree = 0;
  for (int i = 0; i < 50; ++i) {
    const Scenario th = random_valid_scenario(rng);
    PomdpConfig c;
    c.horizon = 6;
    const auto r = optimal_threshold(th, c, 0.01, 4000, Seed{rng()});
    if (distance_to_exact_argmin(th, c, 6, r.tau) <= 0.01 + 1e-12) ++agree;
  }
  CHECK(agree >= 48);
}

TEST_CASE("average baseline threshold") {
  PomdpConfig c;
  c.horizon = 20;
  const Scenario th0{0.2, 0.1, 0.8, 0.3};
  const EmpiricalScenarioDist point{{th0}, {1.0}, "point"};
  CHECK(avg_baseline_threshold(point, c, 0.02, 100, Seed{4}).tau ==
        optimal_threshold(th0, c, 0.02, 100, Seed{4}).tau);

  const EmpiricalScenarioDist two{{with_field(th0, ScenarioField::PuN, 0.2), with_field(th0, ScenarioField::PuN, 0.6)},
                                  {0.5, 0.5},
                                  "two"};
  const auto mid = with_field(th0, ScenarioField::PuN, 0.4);
  CHECK(avg_baseline_threshold(two, c, 0.02, 100, Seed{5}).tau == optimal_threshold(mid, c, 0.02, 100, Seed{5}).tau);

  const auto beta = scaled_beta_from_mean(0.0, 0.7, 0.35, 10.0, ScenarioField::PuN, Scenario{});
  const auto at_mean = with_field(Scenario{}, ScenarioField::PuN, 0.35);
  CHECK(avg_baseline_threshold(beta, c, 0.02, 100, Seed{6}).tau ==
        optimal_threshold(at_mean, c, 0.02, 100, Seed{6}).tau);
}

TEST_CASE("expected-cost baseline on a single scenario matches the optimal threshold") {
  PomdpConfig c;
  c.horizon = 20;
  const ScenarioSet one{{Scenario{}}, "one"};
  const auto a = expected_cost_threshold(one, c, 0.02, 100, Seed{7});
  CHECK(a.tau >= 0.0);
  CHECK(a.tau <= 1.0);
  CHECK_THROWS_AS(expected_cost_threshold(ScenarioSet{}, c, 0.02, 100, Seed{7}), InvalidArgument);
}

TEST_CASE("policy evaluation") {
  EvalOptions opt;
  opt.n_seeds = 5;
  const ScenarioSet test{{Scenario{}, Scenario{0.2, 0.1, 0.8, 0.3}}, "t"};

  SUBCASE("zero costs") {
    const auto rep = evaluate_policies(0.6, 0.5, test, zero_objective, opt, Seed{1});
    for (const char* label : {"meta", "avg"}) {
      CHECK(rep.row(label).mean_cost == 0.0);
      CHECK(rep.row(label).std_dev == 0.0);
      CHECK(rep.row(label).n_seeds == 5);
    }
    CHECK_THROWS_AS(rep.row("robust"), InvalidArgument);
  }

  SUBCASE("single scenario, single seed, stub costs") {
    const ScenarioObjective stub = [](const Scenario&, double tau, Seed) { return 3.0 * tau + 1.0; };
    opt.n_seeds = 1;
    const ScenarioSet one{{Scenario{}}, "one"};
    const auto rep = evaluate_policies(0.6, 0.5, one, stub, opt, Seed{1});
    const double adapted = 0.6 - opt.schedule.gamma * 3.0;
    CHECK(rep.row("meta").mean_cost == doctest::Approx(3.0 * adapted + 1.0).epsilon(1e-12));
    CHECK(rep.row("avg").mean_cost == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(rep.row("meta").std_dev == 0.0);
    REQUIRE(rep.details.size() == 2);
    CHECK(rep.details[0].tau == doctest::Approx(adapted).epsilon(1e-12));
  }

  SUBCASE("replicated rows have zero spread and order does not matter") {
    PomdpConfig c;
    c.horizon = 30;
    const auto objective = mc_objective(c, 20);
    Rng rng(Seed{60});
    ScenarioSet set;
    for (int i = 0; i < 8; ++i) set.scenarios.push_back(random_valid_scenario(rng));
    set.scenarios.push_back(set.scenarios[2]);

    opt.n_seeds = 1;
    const auto single = evaluate_policies(0.7, 0.5, set, objective, opt, Seed{2});
    CHECK(single.row("meta").std_dev == 0.0);

    opt.n_seeds = 4;
    const auto a = evaluate_policies(0.7, 0.5, set, objective, opt, Seed{2});
    ScenarioSet shuffled = set;
    std::reverse(shuffled.scenarios.begin(), shuffled.scenarios.end());
    std::swap(shuffled.scenarios[0], shuffled.scenarios[4]);
    const auto b = evaluate_policies(0.7, 0.5, shuffled, objective, opt, Seed{2});
    for (const char* label : {"meta", "avg"}) {
      CHECK(a.row(label).mean_cost == doctest::Approx(b.row(label).mean_cost).epsilon(1e-12));
      CHECK(a.row(label).std_dev == doctest::Approx(b.row(label).std_dev).epsilon(1e-9));
    }
    opt.jobs = 3;
    const auto threaded = evaluate_policies(0.7, 0.5, set, objective, opt, Seed{2});
    CHECK(threaded.row("meta").mean_cost == a.row("meta").mean_cost);
  }
}

TEST_CASE("adapted-threshold sweep") {
  const auto grid = scenario_grid(Scenario{}, ScenarioField::PuN, 0.1, 0.6, 6);
  const auto flat = sweep_adapted_thresholds(0.64, grid, ScenarioField::PuN, zero_objective, SpsaSchedule{}, 3, Seed{1});
  REQUIRE(flat.size() == 6);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    CHECK(flat[i].param_value == doctest::Approx(0.1 + 0.1 * static_cast<double>(i)));
    CHECK(flat[i].tau_mean == 0.64);
    CHECK(flat[i].tau_std == 0.0);
  }

  const ScenarioObjective slope = [](const Scenario&, double t, Seed) { return 7.0 * t; };
  for (const auto& row : sweep_adapted_thresholds(0.5, grid, ScenarioField::PuN, slope, SpsaSchedule{}, 3, Seed{1})) {
    CHECK(row.tau_mean == doctest::Approx(project_unit_interval(0.5 - 0.005 * 7.0)).epsilon(1e-12));
  }
  const ScenarioObjective steep = [](const Scenario&, double t, Seed) { return -400.0 * t; };
  for (const auto& row : sweep_adapted_thresholds(0.5, grid, ScenarioField::PuN, steep, SpsaSchedule{}, 2, Seed{1})) {
    CHECK(row.tau_mean == 1.0);
  }
}

TEST_CASE("optimal-threshold sweep is deterministic") {
  PomdpConfig c;
  c.horizon = 20;
  const auto grid = scenario_grid(Scenario{}, ScenarioField::PaN, 0.6, 1.0, 3);
  const auto a = sweep_optimal_thresholds(grid, ScenarioField::PaN, c, 0.05, 50, 2, Seed{9});
  const auto b = sweep_optimal_thresholds(grid, ScenarioField::PaN, c, 0.05, 50, 2, Seed{9}, 2);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a[i].tau_mean == b[i].tau_mean);
    CHECK(a[i].param_value == doctest::Approx(0.6 + 0.2 * static_cast<double>(i)));
  }
}

TEST_CASE("worst-case report") {
  EvalOptions opt;
  opt.n_seeds = 3;
  const Scenario low{0.2, 0.1, 0.8, 0.2};
  const Scenario high{0.2, 0.1, 0.8, 0.6};
  const ScenarioSet train{{low, high}, "train"};
  const std::vector<double> weights{0.25, 0.75};

  SUBCASE("hand-set costs") {
    const ScenarioObjective stub = [](const Scenario& th, double tau, Seed) {
      return (th.p_u_n > 0.4 ? 20.0 : 10.0) + tau;
    };
    const double tau_meta = 0.5;
    const double tau_robust = 0.55;
    const double tau_avg = 0.3;
    const double g = opt.schedule.gamma;
    const auto rep = worst_case_report(tau_meta, tau_robust, tau_avg, train, weights, train, stub, opt, Seed{4});
    REQUIRE(rep.worst_case_scenario.has_value());
    CHECK(*rep.worst_case_scenario == high);
    CHECK(rep.row("empirical/avg").mean_cost == doctest::Approx(15.0 + tau_avg));
    CHECK(rep.row("empirical/meta").mean_cost == doctest::Approx(15.0 + tau_meta - g));
    CHECK(rep.row("empirical/robust").mean_cost == doctest::Approx(15.0 + tau_robust - g));
    CHECK(rep.row("worst_case/avg").mean_cost == doctest::Approx(20.0 + tau_avg));
    CHECK(rep.row("worst_case/meta").mean_cost == doctest::Approx(20.0 + tau_meta - g));
    CHECK(rep.row("worst_case/robust").mean_cost == doctest::Approx(20.0 + tau_robust - g));
    CHECK(rep.row("sgda_weights/avg").mean_cost == doctest::Approx(17.5 + tau_avg));
    CHECK(rep.row("sgda_weights/meta").mean_cost == doctest::Approx(17.5 + tau_meta - g));
    CHECK(rep.row("sgda_weights/robust").std_dev == doctest::Approx(0.0));
    CHECK(rep.rows.size() == 9);
  }

  SUBCASE("equal thresholds give equal rows") {
    const auto flat = worst_case_report(0.4, 0.4, 0.4, train, weights, train, zero_objective, opt, Seed{5});
    for (const char* w : {"empirical/", "worst_case/", "sgda_weights/"}) {
      const std::string p(w);
      CHECK(flat.row(p + "avg").mean_cost == flat.row(p + "meta").mean_cost);
      CHECK(flat.row(p + "meta").mean_cost == flat.row(p + "robust").mean_cost);
    }
    PomdpConfig c;
    c.horizon = 30;
    const auto mc = worst_case_report(0.4, 0.4, 0.4, train, weights, train, mc_objective(c, 10), opt, Seed{5});
    CHECK(mc.row("empirical/meta").mean_cost == mc.row("empirical/robust").mean_cost);
    CHECK(mc.row("worst_case/meta").std_dev == mc.row("worst_case/robust").std_dev);
  }

  CHECK_THROWS_AS(worst_case_report(0.4, 0.4, 0.4, train, std::vector<double>{1.0}, train, zero_objective, opt, Seed{5}),
                  InvalidArgument);
}

TEST_CASE("spearman correlation") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(spearman_correlation(x, std::vector<double>{2, 4, 6, 8, 100}) == doctest::Approx(1.0));
  CHECK(spearman_correlation(x, std::vector<double>{5, 4, 3, 2, 1}) == doctest::Approx(-1.0));
  // Ranks of y with one tie: 1, 2, 3.5, 5, 3.5.
  CHECK(spearman_correlation(x, std::vector<double>{5, 6, 7, 8, 7}) == doctest::Approx(8.0 / std::sqrt(95.0)));
  CHECK(spearman_correlation(x, std::vector<double>{3, 3, 3, 3, 3}) == 0.0);
  CHECK_THROWS_AS(spearman_correlation(x, std::vector<double>{1, 2}), InvalidArgument);
}

TEST_CASE("scenario grid") {
  const auto g = scenario_grid(Scenario{}, ScenarioField::PaN, 0.6, 1.0, 5);
  REQUIRE(g.size() == 5);
  CHECK(g.front().p_a_n == 0.6);
  CHECK(g.back().p_a_n == doctest::Approx(1.0));
  CHECK(g[2].p_u_n == Scenario{}.p_u_n);
  CHECK(scenario_grid(Scenario{}, ScenarioField::PaN, 0.7, 0.9, 1).front().p_a_n == 0.7);
  CHECK_THROWS_AS(scenario_grid(Scenario{}, ScenarioField::PaN, 0.6, 1.0, 0), InvalidArgument);
}
