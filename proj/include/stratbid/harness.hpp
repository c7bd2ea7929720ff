#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stratbid/agc.hpp"
#include "stratbid/bilevel.hpp"
#include "stratbid/clearing.hpp"
#include "stratbid/scenario.hpp"

namespace stratbid {

inline constexpr const char* kIntervalCsvSchema = "stratbid.intervals/1";
inline constexpr const char* kSummarySchema = "stratbid.case/1";

class VerificationError : public std::runtime_error {
 public:
  VerificationError(const std::string& what, std::vector<std::string> mismatches)
      : std::runtime_error(what), mismatches_(std::move(mismatches)) {}
  const std::vector<std::string>& mismatches() const { return mismatches_; }

 private:
  std::vector<std::string> mismatches_;
};

class SizeGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScheduleInterval {
  int index = 0;  // 1-based
  double delta_t = 0.25;
  BessQuantityBids bids;
  int u = 0;
  BessAward award;
  MarketPrices prices;
  double soc_start = 0.0;
  double soc = 0.0;  // end of interval
  RevenueBreakdown revenue;  // price x award x delta_t

  IntervalPosition position() const;
};

struct BessSchedule {
  std::vector<ScheduleInterval> intervals;
  RevenueBreakdown totals;
};

// Reads bids, awards, prices and SOC out of a MILP point and recomputes
// every revenue from price x award x delta_t.
BessSchedule schedule_from_solution(const BilevelMilp& milp, const std::vector<double>& x);

struct AgcSummary {
  int intervals_checked = 0;
  int excursion_flags = 0;
  double max_excursion = 0.0;       // MWh
  double max_regulation_delta = 0.0; // |end-of-interval SOC change from regulation|, MWh
  double trace_mileage = 0.0;
  double awarded_mileage = 0.0;
};

// Tracks one seeded trace per interval (seed + interval index).
AgcSummary check_agc(const BessParams& bess, const BessSchedule& schedule, std::uint64_t seed);

struct RunSettings {
  double gap = 0.01;
  double time_limit_seconds = 600.0;
  std::uint64_t seed = 0;
  bool decomposition = true;
  BilevelOptions bilevel;
};

struct CaseReport {
  int case_id = 0;  // 1-4, 0 for a custom mask
  MarketMask mask;
  std::string scenario_digest;
  int intervals = 0;
  MilpCounts counts;
  solver::SolveStatus status = solver::SolveStatus::kInfeasible;
  double objective = 0.0;
  double best_bound = 0.0;
  double gap = 0.0;
  long nodes = 0;
  double seconds = 0.0;
  int decomposition_rounds = 0;
  double decomposition_bound = 0.0;
  bool verified = false;
  std::vector<std::string> verification_notes;
  BessSchedule schedule;
  AgcSummary agc;
  std::vector<std::filesystem::path> files;

  const RevenueBreakdown& totals() const { return schedule.totals; }
  std::string label() const;
};

// Case id for a mask: 1-4 for the four participation policies, 0 otherwise.
int case_for_mask(const MarketMask& mask);

// Stable hex digest of the scenario's data, market mask excluded.
std::string scenario_digest(const Scenario& scenario);

// Assembles, solves, verifies and tracks AGC. Throws VerificationError when
// the solution does not survive re-clearing; a report without schedule is
// returned when no feasible point was found.
CaseReport run_case(const Scenario& scenario, const MarketMask& mask, const RunSettings& settings = {});

struct OracleSettings {
  double step = 0.5;                  // MW
  long max_interval_points = 200000;  // bid combinations per interval
  long max_leaves = 50'000'000;       // full-horizon combinations
};

struct OracleResult {
  double revenue = 0.0;
  std::vector<BessQuantityBids> bids;
  long grid_points = 0;  // full-horizon bid vectors in the grid
  long clearings = 0;    // LL solves
  long feasible = 0;     // full-horizon vectors meeting every BESS constraint
};

// Enumerates bid grids for every interval, clears each interval once per
// grid point and searches the horizon with the SOC recursion. Returns the
// best revenue found, which can only under-approximate the bilevel optimum.
OracleResult brute_force_oracle(const Scenario& scenario, const OracleSettings& settings = {});

struct MonotonicityCheck {
  std::string smaller;
  std::string larger;
  double smaller_total = 0.0;
  double larger_total = 0.0;
  bool holds = false;
};

struct CaseComparison {
  std::vector<std::string> labels;
  std::vector<RevenueBreakdown> totals;
  std::vector<MonotonicityCheck> checks;
  bool monotone() const;
  std::string to_csv() const;
};

// Rows in input order; one check per pair of strictly nested masks.
CaseComparison compare_cases(const std::vector<CaseReport>& reports, double tolerance = 1e-6);

// Writes <stem>_intervals.csv, <stem>_summary.json, <stem>_soc.dat and
// <stem>_revenue.dat into out_dir, records the paths in the report and
// returns them. Byte-identical for identical reports.
std::vector<std::filesystem::path> emit_outputs(CaseReport& report, const std::filesystem::path& out_dir);

std::string interval_csv(const CaseReport& report);
std::string summary_json(const CaseReport& report);

// Reads an interval CSV written by emit_outputs; revenues are recomputed.
BessSchedule read_schedule_csv(const std::filesystem::path& path);

}  // namespace stratbid
