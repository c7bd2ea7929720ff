#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "stratbid/harness.hpp"
#include "test_util.hpp"

using namespace stratbid;
using stratbid::testing::day_patterns;
using stratbid::testing::flat_scenario;
using stratbid::testing::oracle_scenario;
using stratbid::testing::two_level_scenario;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / "stratbid_harness_test" / name;
  std::filesystem::remove_all(d);
  return d;
}

const CaseReport& oracle_case4() {
  static const CaseReport r = run_case(oracle_scenario(), MarketMask::for_case(4));
  return r;
}

}  // namespace

TEST_CASE("oracle grid size at step 2.5") {
  const auto res = brute_force_oracle(oracle_scenario(), {2.5});
  CHECK(res.grid_points <= 6561);
  CHECK(res.grid_points == 45 * 45);
  CHECK(res.clearings == 2 * 45);
  CHECK(res.bids.size() == 2);
  CHECK(res.revenue >= 0.0);
}

TEST_CASE("oracle refinement never loses revenue") {
  const auto s = oracle_scenario();
  const double coarse = brute_force_oracle(s, {2.5}).revenue;
  const double mid = brute_force_oracle(s, {1.25}).revenue;
  CHECK(mid >= coarse - 1e-9);
}

TEST_CASE("oracle size guard") {
  const auto s = desk_scenario(day_patterns());
  CHECK_THROWS_AS(brute_force_oracle(s, {0.5}), SizeGuardError);
  CHECK_THROWS_AS(brute_force_oracle(oracle_scenario(), {0.5, 100}), SizeGuardError);
}

TEST_CASE("MILP revenue is at least the oracle's") {
  const auto& r = oracle_case4();
  REQUIRE(r.verified);
  const double oracle = brute_force_oracle(oracle_scenario(), {1.25}).revenue;
  CHECK(r.objective >= oracle - 1e-5);
}

TEST_CASE("report totals are recomputed from prices and awards") {
  const auto& r = oracle_case4();
  RevenueBreakdown sum;
  for (const auto& i : r.schedule.intervals) {
    const double e = i.prices.energy * (i.award.supply - i.award.demand) * i.delta_t;
    CHECK(i.revenue.energy == doctest::Approx(e));
    CHECK(i.revenue.reg_capacity == doctest::Approx(i.prices.reg_capacity * i.award.reg_capacity * i.delta_t));
    sum.energy += i.revenue.energy;
    sum.reserve += i.revenue.reserve;
    sum.reg_capacity += i.revenue.reg_capacity;
    sum.reg_mileage += i.revenue.reg_mileage;
  }
  CHECK(r.totals().total() == doctest::Approx(sum.total()).epsilon(1e-12));
  CHECK(r.totals().total() == doctest::Approx(r.objective).epsilon(1e-6));
  double soc = oracle_scenario().bess.soc_init;
  for (const auto& i : r.schedule.intervals) {
    CHECK(i.soc == doctest::Approx(soc + (i.award.demand - i.award.supply) * i.delta_t));
    soc = i.soc;
  }
  CHECK(r.agc.intervals_checked == 2);
  CHECK(r.agc.excursion_flags == 0);
}

TEST_CASE("zero-capacity BESS earns nothing") {
  auto s = oracle_scenario();
  s.bess = {0.0, 0.0, 0.0, 0.0, 0.0, 10.0};
  const auto r = run_case(s, MarketMask::for_case(4));
  REQUIRE(r.verified);
  CHECK(r.totals().energy == 0.0);
  CHECK(r.totals().reserve == 0.0);
  CHECK(r.totals().reg_capacity == 0.0);
  CHECK(r.totals().reg_mileage == 0.0);
}

TEST_CASE("two-level prices: buy low, sell high") {
  RunSettings exact;
  exact.gap = 1e-9;
  const auto r = run_case(two_level_scenario(), MarketMask::for_case(1), exact);
  REQUIRE(r.verified);
  for (const auto& i : r.schedule.intervals) {
    if (i.index <= 4) CHECK(i.award.supply == 0.0);
    else CHECK(i.award.demand == 0.0);
  }
  CHECK(r.totals().total() == doctest::Approx(30.0 * 10.0));
}

TEST_CASE("case comparison") {
  const auto s = oracle_scenario();
  std::vector<CaseReport> reports;
  for (int c = 1; c <= 4; ++c) reports.push_back(run_case(s, MarketMask::for_case(c)));
  const auto cmp = compare_cases(reports);
  CHECK(cmp.checks.size() == 5);  // 1<2, 1<3, 1<4, 2<4, 3<4
  CHECK(cmp.monotone());
  CHECK(cmp.to_csv().rfind("case,energy,reserve,reg_capacity,reg_mileage,total\nCase 1,", 0) == 0);

  SUBCASE("identical masks give identical rows") {
    const auto twice = compare_cases({reports[3], run_case(s, MarketMask::for_case(4))});
    CHECK(twice.checks.empty());
    CHECK(twice.totals[0].total() == twice.totals[1].total());
  }
  SUBCASE("mask mismatch") {
    auto bad = reports[0];
    bad.mask = MarketMask::for_case(4);
    CHECK_THROWS_AS(compare_cases({bad, reports[1]}), std::invalid_argument);
  }
  SUBCASE("different scenario") {
    auto other = reports[1];
    other.scenario_digest = "0";
    CHECK_THROWS_AS(compare_cases({reports[0], other}), std::invalid_argument);
  }
}

TEST_CASE("emitted files") {
  auto r = oracle_case4();
  const auto a = scratch("a"), b = scratch("b");
  const auto fa = emit_outputs(r, a);
  auto r2 = oracle_case4();
  const auto fb = emit_outputs(r2, b);
  REQUIRE(fa.size() == 4);
  for (std::size_t i = 0; i < fa.size(); ++i) CHECK(slurp(fa[i]) == slurp(fb[i]));

  const auto csv = slurp(a / "case4_intervals.csv");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  double total = 0.0;
  while (std::getline(in, line)) {
    ++rows;
    total += std::stod(line.substr(line.find_last_of(',') + 1));
  }
  CHECK(rows == r.intervals);
  CHECK(total == doctest::Approx(r.totals().total()).epsilon(1e-9));
  CHECK(slurp(a / "case4_summary.json").find("\"schema\": \"stratbid.case/1\"") != std::string::npos);
}

TEST_CASE("interval CSV golden file") {
  const auto r = run_case(two_level_scenario(4), MarketMask::for_case(1));
  const auto golden = std::filesystem::path(STRATBID_TEST_DATA_DIR) / "two_level_case1_intervals.csv";
  CHECK(interval_csv(r) == slurp(golden));
}
