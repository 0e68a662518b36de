#include <doctest.h>

#include <cmath>
#include <random>

#include "drm/agent.hpp"
#include "drm/demo.hpp"
#include "drm/market.hpp"
#include "drm/oracle.hpp"
#include "drm/pricing.hpp"
#include "support.hpp"

using namespace drm;
using doctest::Approx;

namespace {

EquilibriumReport as_report(const OracleSolution& s) {
  EquilibriumReport r;
  r.converged = true;
  r.allocation = s.allocation;
  r.welfare = s.welfare;
  return r;
}

EquilibriumReport market(const Scenario& sc, double gamma = 0.05) {
  RunConfig cfg;
  cfg.gamma = gamma;
  cfg.tol = 1e-10;
  cfg.record_trace = false;
  return run_market(sc, cfg).report;
}

Allocation random_feasible(std::mt19937_64& rng, const Scenario& sc) {
  Allocation a;
  for (const auto& c : sc.customers) {
    std::vector<double> raw(sc.num_slots);
    for (std::size_t t = 0; t < sc.num_slots; ++t) raw[t] = test::uniform(rng, 0, c.satiation(t));
    a.profiles.push_back(project_profile(raw, c, sc.blocks));
  }
  return a;
}

}  // namespace

TEST_CASE("centralized solve: single customer closed form") {
  const auto sc = test::single(40, 1, 1);
  const auto s = solve_welfare_centralized(sc);
  CHECK(s.converged);
  CHECK_FALSE(s.boundary_degenerate);
  CHECK(s.method == OracleMethod::CentralizedGradient);
  CHECK(s.residual < 1e-9);
  CHECK(s.allocation.profiles[0].x[0] == Approx(40.0 / 3).epsilon(1e-9));
  CHECK(s.welfare == Approx(800.0 / 3).epsilon(1e-9));  // 444.44 - 88.89 - 177.78
}

TEST_CASE("centralized solve: symmetric customers in the second cost segment") {
  const auto sc = test::make_scenario(1, 25, 0.5, 0.6, {{100}, {100}});
  const auto s = solve_welfare_centralized(sc);
  REQUIRE(s.converged);
  const double x = 100.0 / 3.4;  // w - x = 2*beta2*(2x)
  for (const auto& p : s.allocation.profiles) CHECK(p.x[0] == Approx(x).epsilon(1e-9));
  CHECK(s.allocation.demand(0) > 50.0);
  CHECK(utility_gradient(x, 100, 1) == Approx(70.5882).epsilon(1e-5));
  CHECK(price_schedule(s.allocation, sc).p_u[0] == Approx(utility_gradient(x, 100, 1)));
}

TEST_CASE("negligible willingness to pay") {
  const double w = 1e-6;
  const auto sc = test::make_scenario(1, 25, 0.25, 0.25, {{w}});
  const auto s = solve_welfare_centralized(sc);
  CHECK(s.converged);
  CHECK(s.allocation.profiles[0].x[0] == Approx(w / 1.5).epsilon(1e-6));
  const auto grid = brute_force_welfare(sc, 0.01);
  CHECK(grid.allocation.profiles[0].x[0] <= 0.02);
}

TEST_CASE("brute_force_welfare examples") {
  SUBCASE("closed form at fine resolution") {
    const auto g = brute_force_welfare(test::single(40, 1, 1), 0.001);
    CHECK(g.method == OracleMethod::Grid);
    CHECK(std::abs(g.allocation.profiles[0].x[0] - 40.0 / 3) <= 1e-3);
  }
  SUBCASE("singleton feasible set") {
    const auto sc = test::single(40, 1, 1, 25, 10, 10);
    CHECK(brute_force_welfare(sc, 0.01).allocation.profiles[0].x[0] == 10.0);
    CHECK(solve_welfare_centralized(sc).allocation.profiles[0].x[0] == Approx(10));
  }
  SUBCASE("equal cost coefficients leave the blocks inert") {
    const auto sc = test::make_scenario(1, 25, 0.4, 0.4, {{90}, {70}});
    const auto g = brute_force_welfare(sc, 0.01);
    const auto p = price_schedule(g.allocation, sc);
    CHECK(p.p_l[0] == p.p_u[0]);
    const auto c = solve_welfare_centralized(sc);
    CHECK(Allocation::max_gap(c.allocation, g.allocation) <= 0.02);
  }
  SUBCASE("grid size guard and shape limits") {
    const auto big = test::make_scenario(1, 25, 0.1, 0.2, {{100}, {100}, {100}});
    CHECK(grid_size(big, 1e-3) > kMaxGridPoints);
    CHECK_THROWS_AS(brute_force_welfare(big, 1e-3), GridTooLargeError);
    const auto four = test::make_scenario(2, 25, 0.1, 0.2, {{50}, {50}});
    CHECK_THROWS_AS(brute_force_welfare(four, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(brute_force_welfare(test::single(40, 1, 1), 0.0), std::invalid_argument);
  }
}

TEST_CASE("grid and centralized solvers agree where the cost jump is not decisive") {
  const std::vector<Scenario> scenarios{
      test::single(40, 1, 1),
      test::single(80, 0.2, 0.3),  // D > b with a small jump
      test::make_scenario(1, 25, 0.3, 0.3, {{60}, {45}}),
      test::make_scenario(2, 25, 0.2, 0.4, {{nlohmann::json::array({30, 20}), 1, 0, 40}}),
  };
  for (const auto& sc : scenarios) {
    const auto c = solve_welfare_centralized(sc);
    const auto g = brute_force_welfare(sc, 0.01);
    REQUIRE(c.converged);
    CHECK(Allocation::max_gap(c.allocation, g.allocation) <= 0.02);
    CHECK(g.welfare <= c.welfare + 1e-9);
  }
}

TEST_CASE("compare_equilibrium examples") {
  const auto sc = demo_scenario();
  const auto oracle = solve_welfare_centralized(sc);

  const auto same = compare_equilibrium(as_report(oracle), oracle);
  CHECK(same.allocation_gap == 0.0);
  CHECK(same.welfare_gap == 0.0);
  CHECK(same.pass);

  const auto distributed = market(sc);
  const auto r = compare_equilibrium(distributed, oracle);
  CHECK(r.pass);
  CHECK(r.allocation_gap < 1e-3);
  CHECK(r.welfare_gap < 1e-4);
  CHECK_FALSE(r.boundary_degenerate);

  auto perturbed = distributed;
  perturbed.allocation.profiles[0] =
      make_profile({perturbed.allocation.profiles[0].x[0] + 0.5}, sc.blocks);
  perturbed.welfare = social_welfare(perturbed.allocation, sc);
  const auto bad = compare_equilibrium(perturbed, oracle);
  CHECK_FALSE(bad.pass);
  CHECK(bad.allocation_gap == Approx(0.5).epsilon(1e-6));

  const auto doc = to_json(bad);
  CHECK(doc.at("allocation_gap").get<double>() == bad.allocation_gap);
  CHECK(doc.at("welfare_gap").get<double>() == bad.welfare_gap);
  CHECK(doc.at("pass").get<bool>() == false);
  CHECK(doc.at("boundary_degenerate").get<bool>() == false);

  const auto other = solve_welfare_centralized(test::single(40, 1, 1));
  CHECK_THROWS_AS(compare_equilibrium(distributed, other), std::invalid_argument);
}

TEST_CASE("centralized solver reaches the same optimum from random starts") {
  std::mt19937_64 rng(51);
  const std::vector<Scenario> scenarios{
      demo_scenario(),
      test::make_scenario(2, 25, 0.1, 0.2,
                          {{nlohmann::json::array({60, 40}), 1, 20, 90},
                           {nlohmann::json::array({90, 80}), 1, 0, 200}}),
      test::make_scenario(3, 25, 0.3, 0.3, {{nlohmann::json::array({50, 80, 30})}, {40}}),
  };
  for (const auto& sc : scenarios) {
    std::vector<Allocation> found;
    for (int k = 0; k < 10; ++k) {
      CentralizedOptions opt;
      opt.initial = random_feasible(rng, sc);
      const auto s = solve_welfare_centralized(sc, opt);
      REQUIRE(s.converged);
      CHECK_FALSE(s.boundary_degenerate);
      found.push_back(s.allocation);
    }
    for (std::size_t a = 0; a < found.size(); ++a) {
      for (std::size_t b = a + 1; b < found.size(); ++b) {
        CHECK(Allocation::max_gap(found[a], found[b]) < 1e-3);
      }
    }
  }
}

TEST_CASE("a cost boundary optimum is not a block-priced equilibrium") {
  // Demand at the welfare optimum sits exactly at bN = 50, where the cost jumps;
  // the block prices induced there do not support it.
  const auto sc = test::make_scenario(1, 25, 0.5, 0.6, {{60}, {90}});
  const auto distributed = market(sc);
  CHECK(distributed.allocation.profiles[0].x[0] == Approx(13.125).epsilon(1e-8));
  CHECK(distributed.allocation.profiles[1].x[0] == Approx(33.75).epsilon(1e-8));
  CHECK(market_support_gap(distributed.allocation, sc) < 1e-8);

  const auto central = solve_welfare_centralized(sc);
  CHECK(central.boundary_degenerate);
  CHECK(central.allocation.profiles[0].x[0] == Approx(10).epsilon(1e-4));
  CHECK(central.allocation.profiles[1].x[0] == Approx(40).epsilon(1e-4));
  CHECK(central.welfare == Approx(2100).epsilon(1e-6));
  CHECK(market_support_gap(central.allocation, sc) > 1.0);

  const auto r = compare_equilibrium(distributed, central);
  CHECK_FALSE(r.pass);
  CHECK(r.boundary_degenerate);
  CHECK(distributed.welfare < central.welfare);
  CHECK(distributed.welfare <= central.welfare + 1e-6);
}

TEST_CASE("distributed welfare never exceeds the oracle optimum") {
  std::mt19937_64 rng(52);
  int compared = 0;
  for (int s = 0; s < 15; ++s) {
    std::vector<test::CustomerSpec> cs;
    const int N = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < N; ++i) cs.push_back({test::uniform(rng, 10, 100)});
    const double b1 = test::uniform(rng, 0.05, 0.6);
    const auto sc = test::make_scenario(1, 25, b1, b1 + test::uniform(rng, 0, 0.3), cs);
    const auto central = solve_welfare_centralized(sc);
    if (!central.converged || central.boundary_degenerate) continue;
    const auto distributed = market(sc, 0.5 / (1 + 2 * sc.cost.beta2[0] * N));
    CHECK(distributed.welfare <= central.welfare + 1e-6);
    ++compared;
  }
  CHECK(compared >= 10);
}

TEST_CASE("method names") {
  CHECK(to_string(OracleMethod::CentralizedGradient) == "centralized-gradient");
  CHECK(to_string(OracleMethod::Grid) == "grid");
}
