#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "doctest.h"
#include "stratbid/clearing.hpp"
#include "stratbid/simplex.hpp"
#include "test_util.hpp"

using namespace stratbid;
using stratbid::testing::day_patterns;
using stratbid::testing::flat_scenario;

TEST_CASE("five-generator instance has the expected shape") {
  const auto s = reference_scenario(day_patterns());
  const auto inst = build_ll_interval(s, 0, {});
  CHECK(inst.num_columns() == 20 + 5);
  int gen_rows = 0, bess_rows = 0, system_rows = 0;
  for (const auto& r : inst.row_info) {
    if (r.generator >= 0) ++gen_rows;
    else if (r.tag == "L14" || r.tag == "L15" || r.tag == "L16" || r.tag == "L17") ++system_rows;
    else ++bess_rows;
  }
  CHECK(gen_rows == 30);
  CHECK(bess_rows == 6);
  CHECK(system_rows == 4);
  CHECK(inst.lp.rows[inst.row_balance].sense == solver::RowSense::kEqual);
}

TEST_CASE("two generators: marginal unit sets the energy price") {
  const auto s = flat_scenario({{10.0, 100.0}, {20.0, 100.0}}, 150.0);
  const auto r = clear_interval(build_ll_interval(s, 0, {}));
  CHECK(r.generators[0].energy == doctest::Approx(100.0));
  CHECK(r.generators[1].energy == doctest::Approx(50.0));
  CHECK(r.prices.energy == doctest::Approx(20.0));
  CHECK(r.objective == doctest::Approx((10.0 * 100 + 20.0 * 50) * 0.25));
  CHECK(r.duality_gap <= 1e-6);
  CHECK(r.complementarity <= 1e-7);
}

TEST_CASE("zero load clears to nothing") {
  const auto s = flat_scenario({{10.0, 100.0}}, 0.0);
  const auto r = clear_interval(build_ll_interval(s, 0, {}));
  for (double v : r.x) CHECK(v == 0.0);
  CHECK(r.objective == 0.0);
}

TEST_CASE("single generator serves the whole load") {
  const auto s = flat_scenario({{12.0, 100.0}}, 64.0);
  const auto r = clear_interval(build_ll_interval(s, 0, {}));
  CHECK(r.generators[0].energy == doctest::Approx(64.0));
  CHECK(r.generators[0].reserve == 0.0);
  CHECK(r.generators[0].reg_capacity == 0.0);
  CHECK(r.generators[0].reg_mileage == 0.0);
  CHECK(r.prices.energy == doctest::Approx(12.0));
}

TEST_CASE("requirements are met and mileage stays within its multiplier band") {
  const auto s = desk_scenario(day_patterns());
  for (int t = 0; t < s.num_intervals(); ++t) {
    const auto r = clear_interval(build_ll_interval(s, t, {}));
    const auto& iv = s.intervals[t];
    double energy = 0, rs = 0, rc = 0, rm = 0;
    for (std::size_t j = 0; j < r.generators.size(); ++j) {
      const auto& a = r.generators[j];
      energy += a.energy;
      rs += a.reserve;
      rc += a.reg_capacity;
      rm += a.reg_mileage;
      CHECK(a.reg_mileage >= a.reg_capacity - 1e-9);
      CHECK(a.reg_mileage <= s.generators[j].mileage_multiplier * a.reg_capacity + 1e-9);
    }
    CHECK(std::abs(energy - iv.load) <= 1e-9);
    CHECK(rs >= iv.reserve_req - 1e-9);
    CHECK(rc >= iv.regcap_req - 1e-9);
    CHECK(rm >= iv.mileage_req - 1e-9);
    CHECK(r.prices.reserve >= 0.0);
    CHECK(r.prices.reg_capacity >= 0.0);
    CHECK(r.prices.reg_mileage >= 0.0);
    CHECK(r.duality_gap <= 1e-6);
    CHECK(r.complementarity <= 1e-7);
  }
}

TEST_CASE("doubling the interval length leaves prices unchanged") {
  auto s = desk_scenario(day_patterns());
  const BessQuantityBids bids{3.0, 0.0, 2.0, 4.0};
  const auto a = clear_interval(build_ll_interval(s, 10, bids));
  for (auto& iv : s.intervals) iv.delta_t *= 2.0;
  const auto b = clear_interval(build_ll_interval(s, 10, bids));
  CHECK(a.prices.energy == b.prices.energy);
  CHECK(a.prices.reserve == b.prices.reserve);
  CHECK(a.prices.reg_capacity == b.prices.reg_capacity);
  CHECK(a.prices.reg_mileage == b.prices.reg_mileage);
  CHECK(b.objective == doctest::Approx(2.0 * a.objective));
}

TEST_CASE("all-zero BESS bids reproduce the no-BESS prices exactly") {
  const auto s = desk_scenario(day_patterns());
  for (int t = 0; t < s.num_intervals(); ++t) {
    const auto with = clear_interval(build_ll_interval(s, t, {}));
    const auto without = clear_interval(build_ll_interval(s, t, {}, {false, false, false, false}));
    CHECK(with.prices.energy == without.prices.energy);
    CHECK(with.prices.reserve == without.prices.reserve);
    CHECK(with.prices.reg_capacity == without.prices.reg_capacity);
    CHECK(with.prices.reg_mileage == without.prices.reg_mileage);
    CHECK(with.bess.supply == 0.0);
    CHECK(with.bess.reg_mileage == 0.0);
  }
}

TEST_CASE("recovered multipliers of dropped products satisfy the full KKT system") {
  const auto s = desk_scenario(day_patterns());
  const std::vector<BessQuantityBids> cases{{}, {5.0, 0.0, 0.0, 0.0}, {0.0, 6.0, 3.0, 0.0}, {0.0, 0.0, 0.0, 7.0},
                                            {4.0, 0.0, 2.0, 3.0}};
  for (const auto& bids : cases)
    for (int t : {0, 8, 18, 23}) {
      const auto inst = build_ll_interval(s, t, bids);
      const auto r = clear_interval(inst);
      const auto k = ll_kkt_residuals(inst, r.x, r.row_duals);
      CHECK(k.primal <= 1e-7);
      CHECK(k.dual <= 1e-7);
      CHECK(k.complementarity <= 1e-6);
      CHECK(k.duality_gap <= 1e-6);
    }
}

TEST_CASE("BESS supply and demand bids are awarded at default prices") {
  const auto s = desk_scenario(day_patterns());
  const auto sell = clear_interval(build_ll_interval(s, 5, {6.0, 0.0, 0.0, 0.0}));
  CHECK(sell.bess.supply == doctest::Approx(6.0));
  const auto buy = clear_interval(build_ll_interval(s, 5, {0.0, 6.0, 0.0, 0.0}));
  CHECK(buy.bess.demand == doctest::Approx(6.0));
  CHECK(buy.prices.energy >= sell.prices.energy);
}

TEST_CASE("infeasible interval reports its index") {
  auto s = flat_scenario({{10.0, 100.0}}, 50.0, 3);
  s.intervals[2].load = 500.0;
  try {
    clear_horizon(s, std::vector<BessQuantityBids>(3));
    FAIL("expected ClearingError");
  } catch (const ClearingError& e) {
    CHECK(e.interval() == 3);
    CHECK(std::string(e.what()).find("interval 3") != std::string::npos);
  }
}

TEST_CASE("per-interval clearing equals the jointly solved horizon LP") {
  const auto s = desk_scenario(day_patterns());
  std::vector<BessQuantityBids> bids(s.num_intervals());
  for (int t = 0; t < s.num_intervals(); ++t) bids[t] = {t % 3 == 0 ? 4.0 : 0.0, t % 3 == 1 ? 5.0 : 0.0, 1.0, 2.0};
  const auto results = clear_horizon(s, bids);
  double sum = 0.0;
  solver::LpProblem joint;
  for (int t = 0; t < s.num_intervals(); ++t) {
    sum += results[t].objective;
    const auto inst = build_ll_interval(s, t, bids[t]);
    const int c0 = joint.num_columns(), r0 = joint.num_rows();
    for (const auto& c : inst.lp.columns) joint.add_column(c.name, c.cost * inst.delta_t, c.lower, c.upper);
    for (const auto& r : inst.lp.rows) joint.add_row(r.name, r.sense, r.rhs);
    for (const auto& e : inst.lp.coefficients) joint.add_coefficient(r0 + e.row, c0 + e.col, e.value);
  }
  const auto o = solver::solve_lp(joint);
  REQUIRE(o.status == solver::SolveStatus::kOptimal);
  CHECK(std::abs(o.objective - sum) <= 1e-6 * std::max(1.0, std::abs(sum)));

  const auto single = clear_horizon(flat_scenario({{10.0, 100.0}, {20.0, 100.0}}, 150.0), {BessQuantityBids{}});
  const auto direct = clear_interval(build_ll_interval(flat_scenario({{10.0, 100.0}, {20.0, 100.0}}, 150.0), 0, {}));
  CHECK(single.front().objective == direct.objective);
  CHECK(single.front().prices.energy == direct.prices.energy);
}

TEST_CASE("randomized clearing LPs satisfy strong duality and complementarity") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int g = 2 + trial % 4;
    std::vector<std::pair<double, double>> gens;
    double cap = 0.0;
    for (int j = 0; j < g; ++j) {
      gens.push_back({5.0 + 40.0 * u(rng), 50.0 + 150.0 * u(rng)});
      cap += gens.back().second;
    }
    auto s = flat_scenario(gens, 0.5 * cap * (0.2 + 0.6 * u(rng)));
    auto& iv = s.intervals[0];
    iv.reserve_req = 0.1 * iv.load;
    iv.regcap_req = 0.04 * iv.load;
    iv.mileage_req = 1.75 * iv.regcap_req;
    iv.bess_bids.demand = 100.0;
    s.market_mask = {true, true, true};
    const BessQuantityBids bids{u(rng) < 0.5 ? 5 * u(rng) : 0.0, u(rng) < 0.5 ? 5 * u(rng) : 0.0,
                                u(rng) < 0.5 ? 5 * u(rng) : 0.0, u(rng) < 0.5 ? 5 * u(rng) : 0.0};
    const auto r = clear_interval(build_ll_interval(s, 0, bids));
    CHECK(r.duality_gap <= 1e-6);
    CHECK(r.complementarity <= 1e-7);
  }
}

TEST_CASE("clearing CSV has one row per interval") {
  const auto s = desk_scenario(day_patterns());
  const auto results = clear_horizon(s, std::vector<BessQuantityBids>(s.num_intervals()));
  const auto path = std::filesystem::temp_directory_path() / "stratbid_test_clearing.csv";
  write_clearing_csv(results, path);
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == s.num_intervals() + 1);
}
