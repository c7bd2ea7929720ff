// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mps_fixtures.hpp"
#include "stratbid/harness.hpp"
#include "stratbid/mps.hpp"
#include "test_util.hpp"

using namespace stratbid;
using namespace stratbid::testing;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::vector<CaseReport> g_desk;  // filled by criterion 3, reused by 6

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  const auto s = oracle_scenario();
  const auto m = assemble_milp(s);
  solver::MilpSettings st;
  st.heuristic = make_bilevel_heuristic(s, m);
  const auto out = solver::solve_milp(m.milp, st);
  if (out.status != solver::SolveStatus::kOptimal) return {false, "MILP not solved to optimality"};
  const auto rep = verify_bilevel_solution(s, m, out.x);
  const auto oracle = brute_force_oracle(s, {0.5});
  const double secs = since(t0);
  std::ostringstream d;
  d << "MILP " << out.objective << ", oracle(0.5) " << oracle.revenue << " over " << oracle.grid_points
    << " grid points, re-cleared " << rep.optimistic_revenue << ", verified " << rep.passed << ", " << secs << " s";
  const bool ok = rep.passed && out.objective >= oracle.revenue - 1e-5 &&
                  rel_close(rep.optimistic_revenue, rep.recomputed_revenue, 1e-5) &&
                  rel_close(rep.recomputed_revenue, out.objective, 1e-5) && secs <= 60.0;
  return {ok, d.str()};
}

Outcome kkt_suite() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int passed = 0;
  double worst_gap = 0.0, worst_cs = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int g = 2 + trial % 4;
    std::vector<std::pair<double, double>> gens;
    double cap = 0.0;
    for (int j = 0; j < g; ++j) {
      gens.push_back({5.0 + 40.0 * u(rng), 50.0 + 150.0 * u(rng)});
      cap += gens.back().second;
    }
    auto s = flat_scenario(gens, 0.5 * cap * (0.2 + 0.6 * u(rng)));
    auto& iv = s.intervals[0];
    iv.reserve_req = (0.05 + 0.1 * u(rng)) * iv.load;
    iv.regcap_req = (0.02 + 0.04 * u(rng)) * iv.load;
    iv.mileage_req = (1.0 + 2.0 * u(rng)) * iv.regcap_req;
    iv.bess_bids.demand = 100.0;
    s.market_mask = {true, true, true};
    const BessQuantityBids bids{u(rng) < 0.5 ? 5 * u(rng) : 0.0, u(rng) < 0.5 ? 5 * u(rng) : 0.0,
                                u(rng) < 0.5 ? 5 * u(rng) : 0.0, u(rng) < 0.5 ? 5 * u(rng) : 0.0};
    const auto inst = build_ll_interval(s, 0, bids);
    const auto r = clear_interval(inst);
    const auto k = ll_kkt_residuals(inst, r.x, r.row_duals);
    const double gap = std::max(r.duality_gap, k.duality_gap);
    const double cs = std::max(r.complementarity, k.complementarity);
    worst_gap = std::max(worst_gap, gap);
    worst_cs = std::max(worst_cs, cs);
    passed += gap <= 1e-6 && cs <= 1e-7 && k.primal <= 1e-7 && k.dual <= 1e-7;
  }
  std::ostringstream d;
  d << passed << "/500, worst duality gap " << worst_gap << ", worst complementarity " << worst_cs;
  return {passed == 500, d.str()};
}

Outcome monotonicity() {
  const auto s = desk_scenario(day_patterns());
  RunSettings rs;
  rs.gap = 0.01;
  rs.time_limit_seconds = 600.0;
  bool ok = true;
  std::ostringstream d;
  for (int k = 1; k <= 4; ++k) {
    g_desk.push_back(run_case(s, MarketMask::for_case(k), rs));
    const auto& r = g_desk.back();
    ok &= r.verified && r.gap <= 0.01 + 1e-12 && r.seconds <= 600.0;
    d << "case" << k << " " << r.totals().total() << " (gap " << 100.0 * r.gap << "%, " << r.seconds << " s); ";
  }
  const auto cmp = compare_cases(g_desk);
  ok &= cmp.checks.size() == 5 && cmp.monotone();
  d << cmp.checks.size() << " nested pairs, monotone " << cmp.monotone();
  return {ok, d.str()};
}

Outcome two_level_shape() {
  RunSettings exact;
  exact.gap = 1e-9;
  const auto r = run_case(two_level_scenario(), MarketMask::for_case(1), exact);
  if (!r.verified) return {false, "no verified schedule"};
  int bad = 0;
  const int half = static_cast<int>(r.schedule.intervals.size()) / 2;
  for (const auto& i : r.schedule.intervals) bad += i.index <= half ? i.award.supply != 0.0 : i.award.demand != 0.0;
  std::ostringstream d;
  d << bad << " intervals break the shape, revenue " << r.totals().total();
  return {bad == 0 && r.totals().total() > 0.0, d.str()};
}

Outcome agc_neutrality() {
  const BessParams bess{100.0, 10.0, 50.0, 0.0, 100.0, 10.0};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const double cap = seed == 0 ? 0.0 : seed == 1 ? bess.power_rate : bess.power_rate * u(rng);
    const double arb = (u(rng) - 0.5) * (bess.power_rate - cap);
    IntervalPosition p{0.25, 50.0, std::max(arb, 0.0), std::max(-arb, 0.0), 0.0, cap, 1.75 * cap};
    const auto r = simulate_tracking(bess, p, generate_signal(seed));
    worst = std::max(worst, std::abs(r.regulation_delta));
  }
  std::ostringstream d;
  d << "100 traces, worst |regulation SOC delta| " << worst << " MWh";
  return {worst <= 1e-9, d.str()};
}

Outcome headroom_safety() {
  int flags = 0, checked = 0;
  for (const auto& r : g_desk) {
    flags += r.agc.excursion_flags;
    checked += r.agc.intervals_checked;
  }
  std::ostringstream d;
  d << flags << " excursions over " << checked << " tracked intervals in " << g_desk.size() << " desk cases";
  return {g_desk.size() == 4 && checked == 96 && flags == 0, d.str()};
}

Outcome mps_round_trip() {
  std::ifstream f(std::filesystem::path(STRATBID_TEST_DATA_DIR) / "tiny.mps", std::ios::binary);
  std::stringstream golden;
  golden << f.rdbuf();
  const bool golden_ok = solver::to_mps(tiny(), "TINY") == golden.str();

  std::vector<solver::MilpProblem> cases;
  for (std::uint64_t seed = 1; seed <= 18; ++seed) cases.push_back(random_milp(seed));
  auto s = oracle_scenario();
  cases.push_back(assemble_milp(s).milp);
  s.market_mask = MarketMask::for_case(1);
  cases.push_back(assemble_milp(s).milp);

  const auto dir = std::filesystem::temp_directory_path() / "stratbid_acceptance";
  std::filesystem::create_directories(dir);
  int agree = 0;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const auto path = dir / ("p" + std::to_string(k) + ".mps");
    solver::export_mps(cases[k], path);
    const auto a = solver::solve_milp(cases[k]), b = solver::solve_milp(solver::import_mps(path));
    agree += a.status == b.status &&
             (a.status != solver::SolveStatus::kOptimal || rel_close(b.objective, a.objective, 1e-6));
  }
  std::ostringstream d;
  d << agree << "/" << cases.size() << " round-trips agree, golden bytes " << (golden_ok ? "equal" : "differ");
  return {golden_ok && agree == 20, d.str()};
}

Outcome zero_bid_neutrality() {
  const auto s = desk_scenario(day_patterns(), MarketMask::for_case(4));
  int bad = 0;
  for (int t = 0; t < s.num_intervals(); ++t) {
    const auto with = clear_interval(build_ll_interval(s, t, {}));
    const auto without = clear_interval(build_ll_interval(s, t, {}, {false, false, false, false}));
    bad += with.prices.energy != without.prices.energy || with.prices.reserve != without.prices.reserve ||
           with.prices.reg_capacity != without.prices.reg_capacity ||
           with.prices.reg_mileage != without.prices.reg_mileage;
  }
  std::ostringstream d;
  d << bad << " of " << s.num_intervals() << " intervals with differing prices";
  return {bad == 0, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 oracle equivalence", oracle_equivalence},
      {"2 clearing KKT and duality suite", kkt_suite},
      {"3 participation monotonicity on the desk scenario", monotonicity},
      {"4 case 1 arbitrage shape", two_level_shape},
      {"5 AGC SOC neutrality", agc_neutrality},
      {"6 headroom safety", headroom_safety},
      {"7 MPS round trip and golden file", mps_round_trip},
      {"8 zero-bid neutrality", zero_bid_neutrality},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
