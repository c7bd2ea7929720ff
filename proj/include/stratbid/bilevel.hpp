#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stratbid/branch_and_bound.hpp"
#include "stratbid/clearing.hpp"
#include "stratbid/scenario.hpp"

namespace stratbid {

// One complementarity pair of the lower-level KKT system: either an
// inequality row (slack, multiplier) or a nonnegative column (value,
// reduced cost).
struct ComplementarityPair {
  enum class Kind { kRow, kColumn };
  Kind kind = Kind::kRow;
  int index = 0;
  std::string label;
};

struct KktSystem {
  LlInstance ll;
  // Per LL column j: the (row, coefficient) entries of column j, so that
  // the stationarity residual is d_j = c_j - sum_r a_rj y_r with d_j >= 0.
  std::vector<std::vector<std::pair<int, double>>> stationarity;
  std::vector<ComplementarityPair> pairs;

  std::vector<double> reduced_costs(const std::vector<double>& y) const;
  KktResiduals residuals(const std::vector<double>& x, const std::vector<double>& y) const {
    return ll_kkt_residuals(ll, x, y);
  }
  int num_inequality_rows() const;
};

KktSystem derive_kkt(const LlInstance& ll);

// Linear revenue of one interval in the LL primal and dual variables:
// sum over rows with bid-free rhs of b_r y_r minus generator cost, times
// delta_t. Equals the price-times-award revenue at every KKT point.
struct LinearRevenue {
  struct Term {
    bool dual = false;  // y_r when true, x_j otherwise
    int index = 0;
    double coef = 0.0;
  };
  std::vector<Term> terms;
  double evaluate(const std::vector<double>& x, const std::vector<double>& y) const;
};

LinearRevenue linearize_objective(const KktSystem& kkt);

// Revenue of one interval computed directly from prices and awards, $.
struct RevenueBreakdown {
  double energy = 0.0;
  double reserve = 0.0;
  double reg_capacity = 0.0;
  double reg_mileage = 0.0;
  double total() const { return energy + reserve + reg_capacity + reg_mileage; }
};
RevenueBreakdown revenue_from_prices(const LlInstance& ll, const std::vector<double>& x, const std::vector<double>& y);

struct BigMRecord {
  std::string constraint;  // MILP row the constant appears in
  double value = 0.0;
  std::string derivation;
};

struct BilevelOptions {
  bool terminal_soc = false;  // impose SOC_T = SOC_init
  double dual_bound_factor = 2.0;
  // Optional tighter multiplier bounds, indexed [interval][LL row]; used
  // where smaller than the bid-range bound and recorded with the given
  // derivation.
  std::vector<std::vector<double>> dual_bounds;
  std::string dual_bounds_derivation;
};

// Column and row indices of one interval inside the assembled MILP; -1
// when a product is masked out.
struct IntervalBlock {
  int t = 0;
  LlInstance ll;
  int s_bid = -1, d_bid = -1, rs_bid = -1, rg_bid = -1, u = -1, soc = -1;
  std::vector<int> x;  // per LL column
  std::vector<int> y;  // per LL row
  std::vector<int> z;  // per LL row, -1 for the balance equality
  std::vector<int> w;  // per LL column
  std::vector<double> m_primal;  // per LL row: bound on slack
  std::vector<double> m_dual;    // per LL row: bound on |y|
  std::vector<double> m_value;   // per LL column: bound on x
  std::vector<double> m_reduced; // per LL column: bound on reduced cost
};

struct MilpCounts {
  int variables = 0;
  int constraints = 0;
  int binaries = 0;
  int complementarity_binaries = 0;
  int ul_binaries = 0;
};

struct BilevelMilp {
  solver::MilpProblem milp;
  std::vector<IntervalBlock> blocks;
  std::vector<BigMRecord> m_registry;
  MilpCounts counts;
  MarketMask mask;
  BessParams bess;
  BilevelOptions options;
};

// U2-U11 rows over the bid, SOC and LL award columns of each interval.
// Appends to the given MILP.
void build_ul_constraints(const Scenario& scenario, const BilevelOptions& options, BilevelMilp& out);

BilevelMilp assemble_milp(const Scenario& scenario, const BilevelOptions& options = {});

struct IntervalBids {
  BessQuantityBids bids;
  int u = 0;
  double soc = 0.0;
};
std::vector<IntervalBids> extract_bids(const BilevelMilp& milp, const std::vector<double>& x);

struct VerificationReport {
  bool passed = false;
  std::vector<std::string> mismatches;
  std::vector<std::string> notes;
  double milp_objective = 0.0;
  double recomputed_revenue = 0.0;  // sum of price x award x delta_t from the MILP point
  double recleared_revenue = 0.0;   // same, from an independent re-clearing of the bids
  double optimistic_revenue = 0.0;  // re-clearing with ties broken in the BESS's favour
  std::vector<ClearingResult> recleared;
};

VerificationReport verify_bilevel_solution(const Scenario& scenario, const BilevelMilp& milp,
                                           const std::vector<double>& x);

// Builds a full MILP point from bids: clears each interval, picks the LL
// optimum most favourable to the BESS when the clearing is degenerate,
// shrinks bids that would break U6-U10 under the resulting awards, and
// sets the binary selectors from the complementarity pattern. Empty when
// the point is not representable within the big-M bounds.
std::optional<std::vector<double>> complete_from_bids(const Scenario& scenario, const BilevelMilp& milp,
                                                      const std::vector<BessQuantityBids>& bids);

// Heuristic for branch and bound: reads the bids of a relaxation and
// completes them.
solver::MilpHeuristic make_bilevel_heuristic(const Scenario& scenario, const BilevelMilp& milp);

// Price-taker schedule against the no-BESS prices, completed into a MILP
// point. Useful as a first incumbent.
std::optional<std::vector<double>> price_taker_start(const Scenario& scenario, const BilevelMilp& milp);

// Interval decomposition. Rows touching a single interval form that
// interval's sub-MILP; rows linking intervals (SOC recursion) go to a
// column-generation master over convex combinations of sub-MILP points.
// Each pricing round solves every sub-MILP under the master multipliers pi
// and yields, per interval t, the row
//   revenue_t - pi . linking_t <= bound_t
// where bound_t is the sub-MILP's proven upper bound. These rows hold at
// every feasible point; the ones from the best round are appended to the
// MILP ("RB" rows). An incumbent is built by fixing each interval's
// binaries to its heaviest master point and solving what remains.
struct DecompositionOptions {
  int max_rounds = 60;
  double tolerance = 1e-4;  // relative gap between master value and bound
  double time_limit_seconds = 240.0;
  double sub_time_limit_seconds = 20.0;
  double stitch_time_limit_seconds = 30.0;
  std::vector<std::vector<double>> starts;  // full MILP points seeding the master
};

struct DecompositionReport {
  int rounds = 0;
  int rows_added = 0;
  int points = 0;
  double master_value = 0.0;
  double bound = 0.0;  // Lagrangian bound on the MILP optimum
  double seconds = 0.0;
  std::optional<std::vector<double>> incumbent;
  double incumbent_value = 0.0;
};

DecompositionReport decompose_and_bound(const Scenario& scenario, BilevelMilp& milp,
                                        const DecompositionOptions& options = {});

}  // namespace stratbid
