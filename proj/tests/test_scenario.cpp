#include <algorithm>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "stratbid/scenario.hpp"

using namespace stratbid;
namespace fs = std::filesystem;

namespace {

Patterns day() {
  return load_patterns(fs::path(STRATBID_DATA_DIR) / "price_pattern_96.csv",
                       fs::path(STRATBID_DATA_DIR) / "load_pattern_96.csv");
}

fs::path temp_file(const std::string& name, const std::string& body) {
  const auto p = fs::temp_directory_path() / ("stratbid_test_" + name);
  std::ofstream(p) << body;
  return p;
}

bool has_field(const std::vector<Violation>& v, const std::string& field) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.field == field; });
}

}  // namespace

TEST_CASE("bundled patterns have 96 values and peak at interval 73") {
  const auto p = day();
  REQUIRE(p.price.size() == 96);
  REQUIRE(p.load.size() == 96);
  const auto peak = std::max_element(p.load.begin(), p.load.end()) - p.load.begin();
  CHECK(peak + 1 == 73);
  CHECK(p.load[72] == 1.0);
}

TEST_CASE("pattern loading rejects malformed inputs") {
  const auto ok = temp_file("ok.csv", "interval,value\n1,0.5\n2,1.0\n");
  const auto short_file = temp_file("short.csv", "interval,value\n1,0.5\n");
  const auto out_of_range = temp_file("range.csv", "interval,value\n1,1.2\n2,1.0\n");
  const auto no_peak = temp_file("nopeak.csv", "interval,value\n1,0.5\n2,0.9\n");
  const auto garbage = temp_file("garbage.csv", "interval,value\n1,abc\n");
  CHECK_NOTHROW(load_patterns(ok, ok));
  CHECK_THROWS_AS(load_patterns(ok, short_file), ScenarioError);
  CHECK_THROWS_AS(load_patterns(out_of_range, ok), ScenarioError);
  CHECK_THROWS_AS(load_patterns(ok, no_peak), ScenarioError);
  CHECK_THROWS_AS(read_pattern_csv(garbage), ScenarioError);
  CHECK_THROWS_AS(read_pattern_csv("/nonexistent/pattern.csv"), ScenarioError);
}

TEST_CASE("synthesis scales bids and requirements from the patterns") {
  const auto p = day();
  const auto s = reference_scenario(p);
  REQUIRE(s.num_intervals() == 96);
  REQUIRE(s.num_generators() == 5);
  const auto& iv = s.intervals[72];
  CHECK(iv.index == 73);
  CHECK(iv.load == doctest::Approx(1000.0));
  CHECK(iv.reserve_req == doctest::Approx(100.0));
  CHECK(iv.regcap_req == doctest::Approx(40.0));
  CHECK(iv.mileage_req == doctest::Approx(70.0));
  const auto& g4 = iv.generator_bids[3];
  CHECK(g4.energy == doctest::Approx(30.0 * p.price[72]));
  CHECK(g4.reserve == doctest::Approx(0.15 * g4.energy));
  CHECK(g4.reg_capacity == doctest::Approx(0.4 * g4.energy));
  CHECK(g4.reg_mileage == doctest::Approx(0.07 * g4.energy));
  // Demand bid is twice the top summed generator bid; other BESS bids start at zero.
  CHECK(iv.bess_bids.demand == doctest::Approx(2.0 * 40.0 * p.price[72] * 1.62));
  CHECK(iv.bess_bids.supply == 0.0);
  CHECK(iv.bess_bids.reg_mileage == 0.0);
  CHECK(validate_scenario(s).empty());
}

TEST_CASE("desk scenario is a 24-interval reduced system") {
  const auto s = desk_scenario(day(), MarketMask::for_case(2));
  CHECK(s.num_intervals() == 24);
  REQUIRE(s.num_generators() == 3);
  CHECK(s.generators[0].p_max == doctest::Approx(140.0));
  CHECK(s.generators[1].p_max == doctest::Approx(105.0));
  CHECK(s.generators[2].p_max == doctest::Approx(122.5));
  CHECK(s.generators[2].base_price_bid == 30.0);
  CHECK(s.bess.energy_capacity == 100.0);
  CHECK(s.bess.power_rate == 10.0);
  CHECK(s.intervals[0].delta_t == 0.25);
  CHECK(s.market_mask == MarketMask{true, true, false});
  CHECK(validate_scenario(s).empty());
}

TEST_CASE("validation names the offending field") {
  auto s = desk_scenario(day());
  s.bess.soc_init = s.bess.soc_max + 1.0;
  s.generators[1].p_min = s.generators[1].p_max + 1.0;
  s.intervals[3].load = 10000.0;
  s.intervals[5].generator_bids.pop_back();
  const auto v = validate_scenario(s);
  CHECK(has_field(v, "bess.soc_init"));
  CHECK(has_field(v, "generators[1].p_max"));
  CHECK(has_field(v, "intervals[3].feasibility"));
  CHECK(has_field(v, "intervals[5].generator_bids"));
}

TEST_CASE("synthesis rejects an infeasible peak load") {
  CHECK_THROWS_AS(synthesize_scenario(day(), reference_generators(), reference_bess(), 5000.0), ScenarioError);
}

TEST_CASE("market masks") {
  CHECK(MarketMask::for_case(1).label() == "E");
  CHECK(MarketMask::for_case(4).label() == "E+Rs+Rg");
  CHECK(MarketMask::for_case(1).subset_of(MarketMask::for_case(3)));
  CHECK_FALSE(MarketMask::for_case(2).subset_of(MarketMask::for_case(3)));
  CHECK_THROWS_AS(MarketMask::for_case(5), ScenarioError);
}

TEST_CASE("scenario JSON round trip is exact") {
  auto s = desk_scenario(day(), MarketMask::for_case(3));
  s.intervals[2].bess_bids.supply = 1.0 / 3.0;
  const auto path = fs::temp_directory_path() / "stratbid_test_roundtrip.json";
  save_scenario(s, path);
  const auto r = load_scenario(path);
  CHECK(scenario_to_json(r) == scenario_to_json(s));
  CHECK(r.intervals[2].bess_bids.supply == s.intervals[2].bess_bids.supply);
  CHECK(r.market_mask == s.market_mask);
  CHECK_THROWS_AS(scenario_from_json("{\"schema\": \"other/1\"}"), ScenarioError);
  CHECK_THROWS_AS(scenario_from_json("{not json"), ScenarioError);
  CHECK_THROWS_AS(scenario_from_json(std::string("{\"schema\": \"") + kScenarioSchema + "\"}"), ScenarioError);
}
