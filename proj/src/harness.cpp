#include "stratbid/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"
#include "stratbid/branch_and_bound.hpp"

namespace stratbid {

namespace {

std::string num(double v) {
  if (v == 0.0) v = 0.0;  // no negative zero in files
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

int bess_col(const LlInstance& ll, BessVar v) { return ll.bess_col[static_cast<int>(v)]; }

// Awards below the solver's feasibility noise are reported as zero.
double value(const std::vector<double>& x, const IntervalBlock& b, BessVar v) {
  const int c = bess_col(b.ll, v);
  const double a = c < 0 ? 0.0 : x[b.x[c]];
  return std::abs(a) < 1e-9 ? 0.0 : a;
}

RevenueBreakdown revenue(const MarketPrices& p, const BessAward& a, double dt) {
  RevenueBreakdown r;
  r.energy = p.energy * (a.supply - a.demand) * dt;
  r.reserve = p.reserve * a.reserve * dt;
  r.reg_capacity = p.reg_capacity * a.reg_capacity * dt;
  r.reg_mileage = p.reg_mileage * a.reg_mileage * dt;
  return r;
}

void accumulate(RevenueBreakdown& into, const RevenueBreakdown& r) {
  into.energy += r.energy;
  into.reserve += r.reserve;
  into.reg_capacity += r.reg_capacity;
  into.reg_mileage += r.reg_mileage;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

std::string stem(const CaseReport& r) {
  if (r.case_id > 0) return "case" + std::to_string(r.case_id);
  std::string s = "custom_" + r.mask.label();
  std::replace(s.begin(), s.end(), '+', '_');
  return s;
}

}  // namespace

IntervalPosition ScheduleInterval::position() const {
  return {delta_t, soc_start, award.supply, award.demand, award.reserve, award.reg_capacity, award.reg_mileage};
}

BessSchedule schedule_from_solution(const BilevelMilp& milp, const std::vector<double>& x) {
  BessSchedule out;
  const auto bids = extract_bids(milp, x);
  double soc = milp.bess.soc_init;
  for (const auto& b : milp.blocks) {
    ScheduleInterval si;
    si.index = b.t + 1;
    si.delta_t = b.ll.delta_t;
    si.bids = bids[b.t].bids;
    si.u = bids[b.t].u;
    si.award = {value(x, b, BessVar::kSupply), value(x, b, BessVar::kDemand), value(x, b, BessVar::kReserve),
                value(x, b, BessVar::kRegCapacity), value(x, b, BessVar::kRegMileage)};
    si.prices = {x[b.y[b.ll.row_balance]], x[b.y[b.ll.row_reserve]], x[b.y[b.ll.row_regcap]],
                 x[b.y[b.ll.row_mileage]]};
    si.soc_start = soc;
    si.soc = x[b.soc];
    soc = si.soc;
    si.revenue = revenue(si.prices, si.award, si.delta_t);
    accumulate(out.totals, si.revenue);
    out.intervals.push_back(si);
  }
  return out;
}

AgcSummary check_agc(const BessParams& bess, const BessSchedule& schedule, std::uint64_t seed) {
  AgcSummary s;
  for (const auto& iv : schedule.intervals) {
    const auto trace = generate_signal(seed + static_cast<std::uint64_t>(iv.index));
    const auto r = simulate_tracking(bess, iv.position(), trace);
    ++s.intervals_checked;
    if (r.excursion_flag()) ++s.excursion_flags;
    s.max_excursion = std::max(s.max_excursion, r.max_excursion);
    s.max_regulation_delta = std::max(s.max_regulation_delta, std::abs(r.regulation_delta));
    s.trace_mileage += r.trace_mileage;
    s.awarded_mileage += r.awarded_mileage;
  }
  return s;
}

std::string CaseReport::label() const {
  return case_id > 0 ? "Case " + std::to_string(case_id) : "custom (" + mask.label() + ")";
}

int case_for_mask(const MarketMask& mask) {
  for (int c = 1; c <= 4; ++c)
    if (MarketMask::for_case(c) == mask) return c;
  return 0;
}

std::string scenario_digest(const Scenario& scenario) {
  Scenario s = scenario;
  s.market_mask = {};
  const auto text = scenario_to_json(s);
  std::uint64_t h = 14695981039346656037ULL;  // FNV-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

CaseReport run_case(const Scenario& scenario, const MarketMask& mask, const RunSettings& settings) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

  Scenario s = scenario;
  s.market_mask = mask;
  if (const auto v = validate_scenario(s); !v.empty())
    throw ScenarioError("invalid scenario: " + v.front().field + ": " + v.front().message);

  CaseReport rep;
  rep.case_id = case_for_mask(mask);
  rep.mask = mask;
  rep.scenario_digest = scenario_digest(s);
  rep.intervals = s.num_intervals();

  auto milp = assemble_milp(s, settings.bilevel);
  rep.counts = milp.counts;

  solver::MilpSettings ms;
  ms.gap_tolerance = settings.gap;
  ms.seed = settings.seed;
  ms.heuristic = make_bilevel_heuristic(s, milp);
  double decomposition_bound = solver::kInf;
  if (settings.decomposition && s.bess.power_rate > 0.0) {
    DecompositionOptions d;
    d.time_limit_seconds = std::min(d.time_limit_seconds, 0.4 * settings.time_limit_seconds);
    d.sub_time_limit_seconds = std::min(d.sub_time_limit_seconds, 0.05 * settings.time_limit_seconds);
    d.stitch_time_limit_seconds = std::min(d.stitch_time_limit_seconds, 0.05 * settings.time_limit_seconds);
    const auto dr = decompose_and_bound(s, milp, d);
    rep.decomposition_rounds = dr.rounds;
    rep.decomposition_bound = decomposition_bound = dr.bound;
    if (dr.incumbent) ms.initial_solution = *dr.incumbent;
  }
  if (ms.initial_solution.empty())
    if (auto p = price_taker_start(s, milp)) ms.initial_solution = *p;
  ms.time_limit_seconds = std::max(1.0, settings.time_limit_seconds - elapsed());

  const auto out = solver::solve_milp(milp.milp, ms);
  rep.status = out.status;
  rep.nodes = out.nodes;
  if (out.x.empty()) {
    rep.seconds = elapsed();
    return rep;
  }
  rep.objective = out.objective;
  rep.best_bound = std::min(out.best_bound, decomposition_bound);
  rep.gap = std::max(0.0, rep.best_bound - rep.objective) / std::max(std::abs(rep.objective), 1e-10);
  if (rep.status == solver::SolveStatus::kTimeLimit && rep.gap <= settings.gap)
    rep.status = rep.gap <= 1e-9 ? solver::SolveStatus::kOptimal : solver::SolveStatus::kGapLimit;

  const auto ver = verify_bilevel_solution(s, milp, out.x);
  if (!ver.passed) throw VerificationError(rep.label() + " failed verification", ver.mismatches);
  rep.verified = true;
  rep.verification_notes = ver.notes;
  rep.schedule = schedule_from_solution(milp, out.x);
  rep.agc = check_agc(s.bess, rep.schedule, settings.seed);
  rep.seconds = elapsed();
  return rep;
}

OracleResult brute_force_oracle(const Scenario& s, const OracleSettings& cfg) {
  if (!(cfg.step > 0.0)) throw std::invalid_argument("oracle grid step must be positive");
  const auto products = bess_products(s.market_mask);
  const auto& bess = s.bess;
  const double rate = bess.power_rate;
  std::vector<double> grid;
  for (int k = 0; k * cfg.step < rate - 1e-12; ++k) grid.push_back(k * cfg.step);
  grid.push_back(rate);
  auto axis = [&](int p) { return products[p] ? grid : std::vector<double>{0.0}; };

  std::vector<BessQuantityBids> combos;
  for (double sb : axis(0))
    for (double db : axis(1)) {
      if (sb > 0.0 && db > 0.0) continue;  // u selects one direction
      for (double rs : axis(2))
        for (double rg : axis(3)) combos.push_back({sb, db, rs, rg});
    }
  const long per = static_cast<long>(combos.size());
  if (per > cfg.max_interval_points)
    throw SizeGuardError("oracle grid has " + std::to_string(per) + " bid combinations per interval");
  OracleResult res;
  res.grid_points = 1;
  for (int t = 0; t < s.num_intervals(); ++t) {
    if (res.grid_points > cfg.max_leaves / per)
      throw SizeGuardError("oracle grid exceeds " + std::to_string(cfg.max_leaves) + " horizon combinations");
    res.grid_points *= per;
  }

  struct Point {
    BessQuantityBids bids;
    BessAward award;
    double revenue;
  };
  const double tol = 1e-9;
  std::vector<std::vector<Point>> points(s.num_intervals());
  for (int t = 0; t < s.num_intervals(); ++t) {
    for (const auto& b : combos) {
      ClearingResult r;
      try {
        r = clear_interval(build_ll_interval(s, t, b, products));
      } catch (const ClearingError&) {
        continue;
      }
      ++res.clearings;
      const auto& a = r.bess;
      // U6, U7 on the awards
      if (a.demand - a.supply - a.reserve - a.reg_capacity < -rate - tol) continue;
      if (a.demand - a.supply - a.reserve + a.reg_capacity > rate + tol) continue;
      const auto rv = revenue(r.prices, a, r.delta_t);
      points[t].push_back({b, a, rv.total()});
    }
    std::sort(points[t].begin(), points[t].end(), [](const Point& p, const Point& q) { return p.revenue > q.revenue; });
  }

  const int T = s.num_intervals();
  std::vector<double> best_rest(T + 1, 0.0);
  for (int t = T - 1; t >= 0; --t)
    best_rest[t] = best_rest[t + 1] + (points[t].empty() ? -solver::kInf : std::max(0.0, points[t].front().revenue));

  res.revenue = -solver::kInf;
  std::vector<int> pick(T, -1);
  std::function<void(int, double, double)> search = [&](int t, double soc, double acc) {
    if (t == T) {
      ++res.feasible;
      if (acc > res.revenue) {
        res.revenue = acc;
        res.bids.clear();
        for (int k = 0; k < T; ++k) res.bids.push_back(points[k][pick[k]].bids);
      }
      return;
    }
    const double dt = s.intervals[t].delta_t;
    for (int i = 0; i < static_cast<int>(points[t].size()); ++i) {
      const auto& p = points[t][i];
      if (acc + p.revenue + best_rest[t + 1] <= res.revenue + 1e-12) break;
      const auto& a = p.award;
      const double next = soc + (a.demand - a.supply) * dt;  // U8
      if (next < bess.soc_min - tol || next > bess.soc_max + tol) continue;
      if (next - (a.reg_capacity + a.reserve) * dt < bess.soc_min - tol) continue;  // U9
      if (next + a.reg_capacity * dt > bess.soc_max + tol) continue;              // U10
      pick[t] = i;
      search(t + 1, next, acc + p.revenue);
    }
  };
  search(0, bess.soc_init, 0.0);
  if (!std::isfinite(res.revenue)) throw std::runtime_error("oracle found no feasible bid vector");
  return res;
}

bool CaseComparison::monotone() const {
  return std::all_of(checks.begin(), checks.end(), [](const MonotonicityCheck& c) { return c.holds; });
}

std::string CaseComparison::to_csv() const {
  std::string out = "case,energy,reserve,reg_capacity,reg_mileage,total\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& t = totals[i];
    out += labels[i] + "," + num(t.energy) + "," + num(t.reserve) + "," + num(t.reg_capacity) + "," +
           num(t.reg_mileage) + "," + num(t.total()) + "\n";
  }
  return out;
}

CaseComparison compare_cases(const std::vector<CaseReport>& reports, double tolerance) {
  CaseComparison c;
  for (const auto& r : reports) {
    if (r.case_id > 0 && !(MarketMask::for_case(r.case_id) == r.mask))
      throw std::invalid_argument(r.label() + " has mask " + r.mask.label());
    if (r.scenario_digest != reports.front().scenario_digest)
      throw std::invalid_argument(r.label() + " was run on a different scenario");
    c.labels.push_back(r.label());
    c.totals.push_back(r.totals());
  }
  for (std::size_t i = 0; i < reports.size(); ++i)
    for (std::size_t j = 0; j < reports.size(); ++j) {
      const auto& a = reports[i];
      const auto& b = reports[j];
      if (a.mask == b.mask || !a.mask.subset_of(b.mask)) continue;
      MonotonicityCheck m{a.label(), b.label(), a.totals().total(), b.totals().total(), false};
      m.holds = m.smaller_total <= m.larger_total + tolerance * std::max(1.0, std::abs(m.larger_total));
      c.checks.push_back(m);
    }
  return c;
}

std::string interval_csv(const CaseReport& r) {
  std::string out =
      "interval,delta_t,u,bid_supply,bid_demand,bid_reserve,bid_regulation,award_supply,award_demand,"
      "award_reserve,award_reg_capacity,award_reg_mileage,price_energy,price_reserve,price_reg_capacity,"
      "price_reg_mileage,soc_start,soc,revenue_energy,revenue_reserve,revenue_reg_capacity,revenue_reg_mileage,"
      "revenue_total\n";
  for (const auto& i : r.schedule.intervals) {
    const double f[] = {i.delta_t,          i.bids.supply,       i.bids.demand,       i.bids.reserve,
                        i.bids.regulation,  i.award.supply,      i.award.demand,      i.award.reserve,
                        i.award.reg_capacity, i.award.reg_mileage, i.prices.energy,   i.prices.reserve,
                        i.prices.reg_capacity, i.prices.reg_mileage, i.soc_start,     i.soc,
                        i.revenue.energy,   i.revenue.reserve,   i.revenue.reg_capacity, i.revenue.reg_mileage,
                        i.revenue.total()};
    out += std::to_string(i.index);
    for (int k = 0; k < 21; ++k) {
      out += ",";
      if (k == 1) out += std::to_string(i.u) + ",";
      out += num(f[k]);
    }
    out += "\n";
  }
  return out;
}

BessSchedule read_schedule_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
    return out;
  };
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error(path.string() + ": empty file");
  std::map<std::string, std::size_t> col;
  const auto header = split(line);
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"interval", "delta_t", "award_supply", "award_demand", "award_reserve",
                           "award_reg_capacity", "award_reg_mileage", "price_energy", "soc_start", "soc"})
    if (!col.count(need)) throw std::runtime_error(path.string() + ": missing column " + need);

  BessSchedule out;
  int n = 1;
  while (std::getline(f, line)) {
    ++n;
    if (line.empty()) continue;
    const auto cells = split(line);
    auto get = [&](const char* name) {
      const auto it = col.find(name);
      if (it == col.end()) return 0.0;
      if (it->second >= cells.size())
        throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": missing " + name);
      return std::stod(cells[it->second]);
    };
    ScheduleInterval si;
    si.index = static_cast<int>(get("interval"));
    si.delta_t = get("delta_t");
    si.u = static_cast<int>(get("u"));
    si.bids = {get("bid_supply"), get("bid_demand"), get("bid_reserve"), get("bid_regulation")};
    si.award = {get("award_supply"), get("award_demand"), get("award_reserve"), get("award_reg_capacity"),
                get("award_reg_mileage")};
    si.prices = {get("price_energy"), get("price_reserve"), get("price_reg_capacity"), get("price_reg_mileage")};
    si.soc_start = get("soc_start");
    si.soc = get("soc");
    si.revenue = revenue(si.prices, si.award, si.delta_t);
    accumulate(out.totals, si.revenue);
    out.intervals.push_back(si);
  }
  return out;
}

std::string summary_json(const CaseReport& r) {
  using nlohmann::ordered_json;
  auto money = [](const RevenueBreakdown& t) {
    return ordered_json{{"energy", t.energy},
                        {"reserve", t.reserve},
                        {"reg_capacity", t.reg_capacity},
                        {"reg_mileage", t.reg_mileage},
                        {"total", t.total()}};
  };
  ordered_json j;
  j["schema"] = kSummarySchema;
  j["interval_csv_schema"] = kIntervalCsvSchema;
  j["case"] = r.case_id;
  j["label"] = r.label();
  j["mask"] = {{"energy", r.mask.energy}, {"reserve", r.mask.reserve}, {"regulation", r.mask.regulation}};
  j["scenario_digest"] = r.scenario_digest;
  j["intervals"] = r.intervals;
  j["milp"] = {{"variables", r.counts.variables},
               {"constraints", r.counts.constraints},
               {"binaries", r.counts.binaries},
               {"status", std::string(solver::to_string(r.status))},
               {"objective", r.objective},
               {"best_bound", r.best_bound},
               {"gap", r.gap},
               {"nodes", r.nodes},
               {"decomposition_rounds", r.decomposition_rounds}};
  j["verification"] = {{"passed", r.verified}, {"notes", r.verification_notes}};
  j["revenue"] = money(r.totals());
  j["agc"] = {{"intervals_checked", r.agc.intervals_checked},
              {"excursion_flags", r.agc.excursion_flags},
              {"max_excursion_mwh", r.agc.max_excursion},
              {"max_regulation_soc_delta_mwh", r.agc.max_regulation_delta},
              {"trace_mileage", r.agc.trace_mileage},
              {"awarded_mileage", r.agc.awarded_mileage}};
  std::vector<std::string> files;
  for (const auto& f : r.files) files.push_back(f.filename().string());
  j["files"] = files;
  return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> emit_outputs(CaseReport& r, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string st = stem(r);
  const auto csv = out_dir / (st + "_intervals.csv");
  const auto soc = out_dir / (st + "_soc.dat");
  const auto rev = out_dir / (st + "_revenue.dat");
  const auto sum = out_dir / (st + "_summary.json");
  r.files = {csv, soc, rev, sum};

  write_file(csv, interval_csv(r));
  std::string s = "# interval soc_mwh\n";
  if (!r.schedule.intervals.empty()) s += "0 " + num(r.schedule.intervals.front().soc_start) + "\n";
  for (const auto& i : r.schedule.intervals) s += std::to_string(i.index) + " " + num(i.soc) + "\n";
  write_file(soc, s);
  std::string v = "# interval energy reserve reg_capacity reg_mileage\n";
  for (const auto& i : r.schedule.intervals)
    v += std::to_string(i.index) + " " + num(i.revenue.energy) + " " + num(i.revenue.reserve) + " " +
         num(i.revenue.reg_capacity) + " " + num(i.revenue.reg_mileage) + "\n";
  write_file(rev, v);
  write_file(sum, summary_json(r));
  return r.files;
}

}  // namespace stratbid
