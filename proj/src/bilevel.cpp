#include "stratbid/bilevel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "stratbid/simplex.hpp"

namespace stratbid {

using solver::kInf;
using solver::LpProblem;
using solver::RowSense;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string tname(const std::string& base, int t) { return base + "[" + std::to_string(t + 1) + "]"; }

int bess_col(const LlInstance& ll, BessVar v) { return ll.bess_col[static_cast<int>(v)]; }

double at(const std::vector<double>& x, int col) { return col < 0 ? 0.0 : x[col]; }

}  // namespace

std::vector<double> KktSystem::reduced_costs(const std::vector<double>& y) const {
  std::vector<double> d(ll.num_columns());
  for (int j = 0; j < ll.num_columns(); ++j) {
    d[j] = ll.lp.columns[j].cost;
    for (auto [r, a] : stationarity[j]) d[j] -= a * y[r];
  }
  return d;
}

int KktSystem::num_inequality_rows() const {
  int n = 0;
  for (const auto& p : pairs)
    if (p.kind == ComplementarityPair::Kind::kRow) ++n;
  return n;
}

KktSystem derive_kkt(const LlInstance& ll) {
  KktSystem k;
  k.ll = ll;
  k.stationarity.resize(ll.num_columns());
  for (const auto& e : ll.lp.coefficients) k.stationarity[e.col].push_back({e.row, e.value});
  for (auto& col : k.stationarity) std::sort(col.begin(), col.end());
  for (int r = 0; r < ll.num_rows(); ++r)
    if (ll.lp.rows[r].sense != RowSense::kEqual)
      k.pairs.push_back({ComplementarityPair::Kind::kRow, r, ll.lp.rows[r].name});
  for (int j = 0; j < ll.num_columns(); ++j)
    k.pairs.push_back({ComplementarityPair::Kind::kColumn, j, ll.lp.columns[j].name + ">=0"});
  return k;
}

double LinearRevenue::evaluate(const std::vector<double>& x, const std::vector<double>& y) const {
  double v = 0.0;
  for (const auto& t : terms) v += t.coef * (t.dual ? y[t.index] : x[t.index]);
  return v;
}

LinearRevenue linearize_objective(const KktSystem& kkt) {
  const auto& ll = kkt.ll;
  LinearRevenue out;
  for (int r = 0; r < ll.num_rows(); ++r) {
    const double b = ll.lp.rows[r].rhs;
    if (ll.row_info[r].bid >= 0 || b == 0.0) continue;
    out.terms.push_back({true, r, ll.delta_t * b});
  }
  for (int j = 0; j < ll.num_generators; ++j)
    for (int v = 0; v < 4; ++v) {
      const int c = ll.gen_col(j, static_cast<GenVar>(v));
      const double cost = ll.lp.columns[c].cost;
      if (cost != 0.0) out.terms.push_back({false, c, -ll.delta_t * cost});
    }
  return out;
}

RevenueBreakdown revenue_from_prices(const LlInstance& ll, const std::vector<double>& x, const std::vector<double>& y) {
  RevenueBreakdown r;
  const double dt = ll.delta_t;
  r.energy = y[ll.row_balance] * (at(x, bess_col(ll, BessVar::kSupply)) - at(x, bess_col(ll, BessVar::kDemand))) * dt;
  r.reserve = y[ll.row_reserve] * at(x, bess_col(ll, BessVar::kReserve)) * dt;
  r.reg_capacity = y[ll.row_regcap] * at(x, bess_col(ll, BessVar::kRegCapacity)) * dt;
  r.reg_mileage = y[ll.row_mileage] * at(x, bess_col(ll, BessVar::kRegMileage)) * dt;
  return r;
}

namespace {

// Bound on an LL column's value from the unit or BESS limits.
double column_bound(const Scenario& s, const LlInstance& ll, int col, std::string& why) {
  for (int j = 0; j < ll.num_generators; ++j) {
    const auto& g = s.generators[j];
    const double rs = std::min(g.reserve_ramp, g.p_max), rc = std::min(g.regulation_ramp, g.p_max);
    if (col == ll.gen_col(j, GenVar::kEnergy)) return why = "p_max", g.p_max;
    if (col == ll.gen_col(j, GenVar::kReserve)) return why = "min(reserve ramp, p_max)", rs;
    if (col == ll.gen_col(j, GenVar::kRegCapacity)) return why = "min(regulation ramp, p_max)", rc;
    if (col == ll.gen_col(j, GenVar::kRegMileage))
      return why = "mileage multiplier x min(regulation ramp, p_max)", g.mileage_multiplier * rc;
  }
  if (col == bess_col(ll, BessVar::kRegMileage))
    return why = "BESS mileage multiplier x P_rate", s.bess.mileage_multiplier * s.bess.power_rate;
  return why = "P_rate via the quantity bid", s.bess.power_rate;
}

}  // namespace

void build_ul_constraints(const Scenario& s, const BilevelOptions& options, BilevelMilp& out) {
  auto& lp = out.milp.lp;
  const double rate = s.bess.power_rate;
  int prev_soc = -1;
  for (auto& b : out.blocks) {
    const auto& ll = b.ll;
    const double dt = ll.delta_t;
    const int S = bess_col(ll, BessVar::kSupply) < 0 ? -1 : b.x[bess_col(ll, BessVar::kSupply)];
    const int D = bess_col(ll, BessVar::kDemand) < 0 ? -1 : b.x[bess_col(ll, BessVar::kDemand)];
    const int RS = bess_col(ll, BessVar::kReserve) < 0 ? -1 : b.x[bess_col(ll, BessVar::kReserve)];
    const int RC = bess_col(ll, BessVar::kRegCapacity) < 0 ? -1 : b.x[bess_col(ll, BessVar::kRegCapacity)];
    auto terms = [](std::initializer_list<std::pair<int, double>> in) {
      std::vector<std::pair<int, double>> e;
      for (auto p : in)
        if (p.first >= 0) e.push_back(p);
      return e;
    };
    if (b.s_bid >= 0) lp.add_row(tname("U2", b.t), RowSense::kLessEqual, 0.0, {{b.s_bid, 1.0}, {b.u, -rate}});
    if (b.d_bid >= 0) lp.add_row(tname("U3", b.t), RowSense::kLessEqual, rate, {{b.d_bid, 1.0}, {b.u, rate}});
    lp.add_row(tname("U6", b.t), RowSense::kGreaterEqual, -rate, terms({{D, 1.0}, {S, -1.0}, {RS, -1.0}, {RC, -1.0}}));
    lp.add_row(tname("U7", b.t), RowSense::kLessEqual, rate, terms({{D, 1.0}, {S, -1.0}, {RS, -1.0}, {RC, 1.0}}));
    lp.add_row(tname("U8", b.t), RowSense::kEqual, prev_soc < 0 ? s.bess.soc_init : 0.0,
               terms({{b.soc, 1.0}, {prev_soc, -1.0}, {D, -dt}, {S, dt}}));
    lp.add_row(tname("U9", b.t), RowSense::kGreaterEqual, s.bess.soc_min, terms({{b.soc, 1.0}, {RC, -dt}, {RS, -dt}}));
    lp.add_row(tname("U10", b.t), RowSense::kLessEqual, s.bess.soc_max, terms({{b.soc, 1.0}, {RC, dt}}));
    prev_soc = b.soc;
  }
  if (options.terminal_soc && prev_soc >= 0)
    lp.add_row("SOC_T", RowSense::kEqual, s.bess.soc_init, {{prev_soc, 1.0}});
}

BilevelMilp assemble_milp(const Scenario& s, const BilevelOptions& options) {
  const auto violations = validate_scenario(s);
  if (!violations.empty())
    throw ScenarioError("cannot assemble an invalid scenario: " + violations.front().field + ": " +
                        violations.front().message);

  BilevelMilp out;
  out.mask = s.market_mask;
  out.bess = s.bess;
  out.options = options;
  auto& lp = out.milp.lp;
  lp.sense = solver::ObjectiveSense::kMaximize;
  auto& ints = out.milp.is_integer;
  auto& prio = out.milp.priority;
  auto add_col = [&](const std::string& name, double lo, double hi, bool binary, int priority) {
    const int c = lp.add_column(name, 0.0, lo, hi);
    ints.push_back(binary ? 1 : 0);
    prio.push_back(priority);
    return c;
  };
  const auto products = bess_products(s.market_mask);
  const double rate = s.bess.power_rate;
  double mult_max = s.bess.mileage_multiplier;
  for (const auto& g : s.generators) mult_max = std::max(mult_max, g.mileage_multiplier);

  for (int t = 0; t < s.num_intervals(); ++t) {
    IntervalBlock b;
    b.t = t;
    b.ll = build_ll_interval(s, t, {}, products);
    const auto& ll = b.ll;
    const std::string pre = "[" + std::to_string(t + 1) + "]";
    if (products[0]) b.s_bid = add_col("sbid" + pre, 0.0, rate, false, 0);
    if (products[1]) b.d_bid = add_col("dbid" + pre, 0.0, rate, false, 0);
    if (products[2]) b.rs_bid = add_col("rsbid" + pre, 0.0, rate, false, 0);
    if (products[3]) b.rg_bid = add_col("rgbid" + pre, 0.0, rate, false, 0);
    if (products[0]) b.u = add_col("u" + pre, 0.0, 1.0, true, 1);
    b.soc = add_col("soc" + pre, s.bess.soc_min, s.bess.soc_max, false, 0);
    const int bid_col[4] = {b.s_bid, b.d_bid, b.rs_bid, b.rg_bid};

    const int n = ll.num_columns(), m = ll.num_rows();
    // Column value bounds.
    b.m_value.resize(n);
    std::vector<std::string> value_why(n);
    for (int j = 0; j < n; ++j) b.m_value[j] = column_bound(s, ll, j, value_why[j]);

    // Dual bound from the bid range of this interval.
    double B = 0.0;
    for (const auto& c : ll.lp.columns) B = std::max(B, std::abs(c.cost));
    for (const auto& a : s.intervals[t].generator_bids)
      B = std::max({B, std::abs(a.energy), std::abs(a.reserve), std::abs(a.reg_capacity), std::abs(a.reg_mileage)});
    const double md = options.dual_bound_factor * B * (1.0 + mult_max);
    const std::string md_why = fmt(options.dual_bound_factor) + " x max|bid| (" + fmt(B) +
                               ") x (1 + max mileage multiplier " + fmt(mult_max) + ")";
    b.m_dual.assign(m, md);
    std::vector<std::string> dual_why(m, md_why);
    if (t < static_cast<int>(options.dual_bounds.size()))
      for (int r = 0; r < m; ++r)
        if (options.dual_bounds[t][r] < b.m_dual[r]) {
          b.m_dual[r] = options.dual_bounds[t][r];
          dual_why[r] = options.dual_bounds_derivation;
        }

    // Slack bounds by interval arithmetic over the column and bid ranges.
    b.m_primal.assign(m, 0.0);
    {
      std::vector<double> hi(m, 0.0);
      for (const auto& e : ll.lp.coefficients) hi[e.row] += std::max(0.0, e.value * b.m_value[e.col]);
      for (int r = 0; r < m; ++r) {
        double slack = hi[r] - ll.lp.rows[r].rhs;
        if (ll.row_info[r].bid >= 0) slack = hi[r] + rate;
        b.m_primal[r] = std::max(0.0, slack);
      }
    }
    // Reduced-cost bounds from the dual box.
    b.m_reduced.assign(n, 0.0);
    for (int j = 0; j < n; ++j) b.m_reduced[j] = ll.lp.columns[j].cost;
    for (const auto& e : ll.lp.coefficients) {
      const bool free_row = ll.lp.rows[e.row].sense == RowSense::kEqual;
      const double yhi = b.m_dual[e.row], ylo = free_row ? -yhi : 0.0;
      b.m_reduced[e.col] += std::max(-e.value * ylo, -e.value * yhi);
    }
    for (auto& v : b.m_reduced) v = std::max(0.0, v);

    for (int j = 0; j < n; ++j) b.x.push_back(add_col("x" + pre + ll.lp.columns[j].name, 0.0, b.m_value[j], false, 0));
    for (int r = 0; r < m; ++r) {
      const bool eq = ll.lp.rows[r].sense == RowSense::kEqual;
      b.y.push_back(add_col("y" + pre + ll.lp.rows[r].name, eq ? -b.m_dual[r] : 0.0, b.m_dual[r], false, 0));
    }
    for (int r = 0; r < m; ++r)
      b.z.push_back(ll.lp.rows[r].sense == RowSense::kEqual ? -1
                                                           : add_col("z" + pre + ll.lp.rows[r].name, 0, 1, true, 2));
    for (int j = 0; j < n; ++j) b.w.push_back(add_col("w" + pre + ll.lp.columns[j].name, 0, 1, true, 2));

    // Row expressions of the LL in MILP columns.
    std::vector<std::vector<std::pair<int, double>>> row_expr(m), col_expr(n);
    for (const auto& e : ll.lp.coefficients) {
      row_expr[e.row].push_back({b.x[e.col], e.value});
      col_expr[e.col].push_back({b.y[e.row], e.value});
    }
    std::vector<double> rhs(m);
    for (int r = 0; r < m; ++r) {
      rhs[r] = ll.lp.rows[r].rhs;
      if (ll.row_info[r].bid >= 0) {
        row_expr[r].push_back({bid_col[ll.row_info[r].bid], 1.0});
        rhs[r] = 0.0;
      }
    }

    for (int r = 0; r < m; ++r) lp.add_row("P" + pre + ll.lp.rows[r].name, ll.lp.rows[r].sense, rhs[r], row_expr[r]);
    for (int j = 0; j < n; ++j)
      lp.add_row("D" + pre + ll.lp.columns[j].name, RowSense::kLessEqual, ll.lp.columns[j].cost, col_expr[j]);
    for (int r = 0; r < m; ++r) {
      if (b.z[r] < 0) continue;
      const auto& nm = ll.lp.rows[r].name;
      auto e = row_expr[r];
      e.push_back({b.z[r], b.m_primal[r]});
      const std::string cp = "CP" + pre + nm, cd = "CD" + pre + nm;
      lp.add_row(cp, RowSense::kLessEqual, rhs[r] + b.m_primal[r], e);
      lp.add_row(cd, RowSense::kLessEqual, 0.0, {{b.y[r], 1.0}, {b.z[r], -b.m_dual[r]}});
      out.m_registry.push_back(
          {cp, b.m_primal[r], "slack bound by interval arithmetic over LL column bounds and bids in [0, P_rate]"});
      out.m_registry.push_back({cd, b.m_dual[r], dual_why[r]});
    }
    for (int j = 0; j < n; ++j) {
      const auto& nm = ll.lp.columns[j].name;
      auto e = col_expr[j];
      for (auto& p : e) p.second = -p.second;
      e.push_back({b.w[j], b.m_reduced[j]});
      const std::string cx = "CX" + pre + nm, cr = "CR" + pre + nm;
      lp.add_row(cx, RowSense::kLessEqual, 0.0, {{b.x[j], 1.0}, {b.w[j], -b.m_value[j]}});
      lp.add_row(cr, RowSense::kLessEqual, b.m_reduced[j] - ll.lp.columns[j].cost, e);
      out.m_registry.push_back({cx, b.m_value[j], value_why[j]});
      out.m_registry.push_back({cr, b.m_reduced[j], "reduced cost bound by interval arithmetic with |y| <= M_dual"});
    }

    // Linearized revenue.
    const auto rev = linearize_objective(derive_kkt(ll));
    for (const auto& term : rev.terms) lp.columns[term.dual ? b.y[term.index] : b.x[term.index]].cost += term.coef;

    out.counts.complementarity_binaries += static_cast<int>(std::count_if(b.z.begin(), b.z.end(), [](int c) {
                                             return c >= 0;
                                           })) + n;
    if (b.u >= 0) ++out.counts.ul_binaries;
    out.blocks.push_back(std::move(b));
  }
  build_ul_constraints(s, options, out);
  out.counts.variables = lp.num_columns();
  out.counts.constraints = lp.num_rows();
  out.counts.binaries = out.milp.num_integers();
  return out;
}

std::vector<IntervalBids> extract_bids(const BilevelMilp& milp, const std::vector<double>& x) {
  std::vector<IntervalBids> out;
  auto clean = [](double v) { return std::abs(v) < 1e-9 ? 0.0 : v; };
  for (const auto& b : milp.blocks) {
    IntervalBids ib;
    ib.bids = {clean(at(x, b.s_bid)), clean(at(x, b.d_bid)), clean(at(x, b.rs_bid)), clean(at(x, b.rg_bid))};
    ib.u = b.u < 0 ? 0 : static_cast<int>(std::lround(x[b.u]));
    ib.soc = x[b.soc];
    out.push_back(ib);
  }
  return out;
}

namespace {

bool same(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace

namespace {

struct Response {
  std::vector<double> x;
  std::vector<double> y;
};

BessAward awards(const LlInstance& ll, const std::vector<double>& x) {
  BessAward a;
  a.supply = at(x, bess_col(ll, BessVar::kSupply));
  a.demand = at(x, bess_col(ll, BessVar::kDemand));
  a.reserve = at(x, bess_col(ll, BessVar::kReserve));
  a.reg_capacity = at(x, bess_col(ll, BessVar::kRegCapacity));
  a.reg_mileage = at(x, bess_col(ll, BessVar::kRegMileage));
  return a;
}

// Among all LL optima for fixed bids, the pair most favourable to the
// BESS: generator cost minimized over the primal optimal face, then the
// bid-free dual terms maximized over the multipliers complementary to that
// primal point. Falls back to the cleared pair when either LP fails.
Response optimistic_response(const LlInstance& ll, const IntervalBlock& blk, const ClearingResult& rc) {
  const double v = rc.objective / ll.delta_t;
  const int n = ll.num_columns(), m = ll.num_rows();

  LpProblem primal = ll.lp;
  std::vector<std::pair<int, double>> cost_row;
  for (int j = 0; j < n; ++j) {
    if (primal.columns[j].cost != 0.0) cost_row.push_back({j, primal.columns[j].cost});
    primal.columns[j].cost = 0.0;
  }
  for (int j = 0; j < ll.num_generators; ++j)
    for (int k = 0; k < 4; ++k) {
      const int c = ll.gen_col(j, static_cast<GenVar>(k));
      primal.columns[c].cost = ll.lp.columns[c].cost;
    }
  primal.add_row("face", RowSense::kLessEqual, v + 1e-9 * std::max(1.0, std::abs(v)), cost_row);
  const auto po = solver::solve_lp(primal);
  if (po.status != solver::SolveStatus::kOptimal) return {rc.x, rc.row_duals};

  std::vector<double> x = po.x;
  for (auto& xj : x)
    if (xj <= 1e-9) xj = 0.0;
  const auto act = ll.lp.row_activity(x);

  LpProblem dual;
  dual.sense = solver::ObjectiveSense::kMaximize;
  for (int r = 0; r < m; ++r) {
    const auto& row = ll.lp.rows[r];
    const double hi = blk.m_dual[r];
    const bool eq = row.sense == RowSense::kEqual;
    const bool tight = eq || act[r] - row.rhs <= 1e-7 * std::max(1.0, std::abs(row.rhs));
    dual.add_column(row.name, ll.row_info[r].bid < 0 ? row.rhs : 0.0, eq ? -hi : 0.0, tight ? hi : 0.0);
  }
  std::vector<std::vector<std::pair<int, double>>> cols(n);
  for (const auto& e : ll.lp.coefficients) cols[e.col].push_back({e.row, e.value});
  for (int j = 0; j < n; ++j)
    dual.add_row(ll.lp.columns[j].name, x[j] > 0.0 ? RowSense::kEqual : RowSense::kLessEqual, ll.lp.columns[j].cost,
                 cols[j]);
  const auto d = solver::solve_lp(dual);
  if (d.status != solver::SolveStatus::kOptimal) return {rc.x, rc.row_duals};
  return {x, d.x};
}

}  // namespace

VerificationReport verify_bilevel_solution(const Scenario& s, const BilevelMilp& milp, const std::vector<double>& x) {
  VerificationReport rep;
  if (static_cast<int>(x.size()) != milp.milp.lp.num_columns()) {
    rep.mismatches.push_back("solution vector has the wrong length");
    return rep;
  }
  const auto products = bess_products(milp.mask);
  const auto bids = extract_bids(milp, x);
  rep.milp_objective = milp.milp.lp.evaluate_objective(x);

  for (const auto& b : milp.blocks) {
    const std::string where = "interval " + std::to_string(b.t + 1) + ": ";
    const auto ll = build_ll_interval(s, b.t, bids[b.t].bids, products);
    std::vector<double> xl(ll.num_columns()), yl(ll.num_rows());
    for (int j = 0; j < ll.num_columns(); ++j) xl[j] = x[b.x[j]];
    for (int r = 0; r < ll.num_rows(); ++r) yl[r] = x[b.y[r]];

    // Primal feasibility of the MILP awards, row by row.
    const auto act = ll.lp.row_activity(xl);
    std::string violated;
    for (int r = 0; r < ll.num_rows(); ++r) {
      const auto& row = ll.lp.rows[r];
      double v = 0.0;
      if (row.sense == RowSense::kEqual) v = std::abs(act[r] - row.rhs);
      else v = row.rhs - act[r];
      if (v > 1e-6) violated += (violated.empty() ? "" : ", ") + row.name + " by " + fmt(v);
    }
    for (int j = 0; j < ll.num_columns(); ++j)
      if (xl[j] < -1e-6) violated += (violated.empty() ? "" : ", ") + ll.lp.columns[j].name + " >= 0";
    if (!violated.empty()) rep.mismatches.push_back(where + "LL primal rows violated: " + violated);

    ClearingResult rc;
    try {
      rc = clear_interval(ll);
    } catch (const ClearingError& e) {
      rep.mismatches.push_back(where + "re-clearing failed: " + e.what());
      continue;
    }
    rep.recleared.push_back(rc);

    const auto kkt = ll_kkt_residuals(ll, xl, yl);
    if (kkt.dual > 1e-6) rep.mismatches.push_back(where + "LL dual feasibility violated by " + fmt(kkt.dual));
    double primal_obj = 0.0, dual_obj = 0.0;
    for (int j = 0; j < ll.num_columns(); ++j) primal_obj += ll.lp.columns[j].cost * xl[j];
    for (int r = 0; r < ll.num_rows(); ++r) dual_obj += ll.lp.rows[r].rhs * yl[r];
    primal_obj *= ll.delta_t;
    dual_obj *= ll.delta_t;
    if (!same(primal_obj, rc.objective, 1e-6))
      rep.mismatches.push_back(where + "LL objective " + fmt(primal_obj) + " differs from re-cleared " +
                               fmt(rc.objective));
    if (!same(dual_obj, rc.objective, 1e-6))
      rep.mismatches.push_back(where + "LL dual objective " + fmt(dual_obj) + " differs from re-cleared " +
                               fmt(rc.objective) + " (prices not optimal)");

    bool differs = false;
    for (int j = 0; j < ll.num_columns(); ++j) differs |= !same(xl[j], rc.x[j], 1e-6);
    for (int r : {ll.row_balance, ll.row_reserve, ll.row_regcap, ll.row_mileage}) differs |= !same(yl[r], rc.row_duals[r], 1e-6);
    if (differs && violated.empty())
      rep.notes.push_back(where + "LL is degenerate; MILP awards or prices differ from the re-cleared ones at equal cost");

    for (int r = 0; r < ll.num_rows(); ++r)
      if (b.m_dual[r] > 0.0 && std::abs(yl[r]) >= b.m_dual[r] * (1.0 - 1e-9))
        rep.notes.push_back(where + "multiplier of " + ll.lp.rows[r].name + " sits at its big-M bound " +
                            fmt(b.m_dual[r]));

    rep.recomputed_revenue += revenue_from_prices(ll, xl, yl).total();
    rep.recleared_revenue += revenue_from_prices(ll, rc.x, rc.row_duals).total();
    const auto opt = optimistic_response(ll, b, rc);
    rep.optimistic_revenue += revenue_from_prices(ll, opt.x, opt.y).total();
  }

  // Upper-level rows.
  const auto& lp = milp.milp.lp;
  const auto act = lp.row_activity(x);
  for (int i = 0; i < lp.num_rows(); ++i) {
    const auto& row = lp.rows[i];
    if (row.name.rfind("U", 0) != 0 && row.name != "SOC_T") continue;
    double v = 0.0;
    if (row.sense == RowSense::kEqual) v = std::abs(act[i] - row.rhs);
    else if (row.sense == RowSense::kGreaterEqual) v = row.rhs - act[i];
    else v = act[i] - row.rhs;
    if (v > 1e-6) rep.mismatches.push_back("upper level " + row.name + " violated by " + fmt(v));
  }
  for (const auto& b : milp.blocks)
    if (b.u >= 0 && std::abs(x[b.u] - std::round(x[b.u])) > 1e-6)
      rep.mismatches.push_back("upper level U11[" + std::to_string(b.t + 1) + "] not binary");

  if (!same(rep.milp_objective, rep.recomputed_revenue, 1e-5))
    rep.mismatches.push_back("objective linearization: MILP objective " + fmt(rep.milp_objective) +
                             " but price x award revenue is " + fmt(rep.recomputed_revenue));
  if (!same(rep.optimistic_revenue, rep.recomputed_revenue, 1e-5))
    rep.notes.push_back("optimistic re-clearing revenue " + fmt(rep.optimistic_revenue) +
                        " differs from MILP revenue " + fmt(rep.recomputed_revenue));
  if (!same(rep.recleared_revenue, rep.recomputed_revenue, 1e-5))
    rep.notes.push_back("re-cleared revenue " + fmt(rep.recleared_revenue) + " differs from MILP revenue " +
                        fmt(rep.recomputed_revenue) + " through LL degeneracy");
  rep.passed = rep.mismatches.empty();
  return rep;
}

std::optional<std::vector<double>> complete_from_bids(const Scenario& s, const BilevelMilp& milp,
                                                      const std::vector<BessQuantityBids>& bids_in) {
  if (bids_in.size() != milp.blocks.size()) return std::nullopt;
  const auto products = bess_products(milp.mask);
  const auto& bess = s.bess;
  const double rate = bess.power_rate;
  std::vector<double> x(milp.milp.lp.num_columns(), 0.0);
  double soc = bess.soc_init;
  const double tol = 1e-9;

  for (const auto& blk : milp.blocks) {
    const double dt = blk.ll.delta_t;
    auto b = bids_in[blk.t];
    double* v[4] = {&b.supply, &b.demand, &b.reserve, &b.regulation};
    for (int p = 0; p < 4; ++p) *v[p] = products[p] ? std::clamp(*v[p], 0.0, rate) : 0.0;
    if (b.supply > 0.0 && b.demand > 0.0) (b.supply >= b.demand ? b.demand : b.supply) = 0.0;

    // Clip against U6, U7, U9 and U10 assuming awards equal bids.
    auto scale_down = [](std::initializer_list<double*> vs, double cap) {
      double sum = 0.0;
      for (double* p : vs) sum += *p;
      if (sum <= cap) return;
      const double f = sum > 0.0 ? std::max(0.0, cap) / sum : 0.0;
      for (double* p : vs) *p *= f;
    };
    scale_down({&b.supply, &b.reserve, &b.regulation}, rate + b.demand);
    scale_down({&b.demand, &b.regulation}, rate + b.supply + b.reserve);
    scale_down({&b.demand, &b.regulation}, (bess.soc_max - soc) / dt + b.supply);
    scale_down({&b.supply, &b.reserve, &b.regulation}, (soc - bess.soc_min) / dt + b.demand);

    LlInstance ll;
    Response r;
    bool ok = false;
    for (int attempt = 0; attempt < 40 && !ok; ++attempt) {
      if (attempt == 39) b = {};
      ll = build_ll_interval(s, blk.t, b, products);
      r = optimistic_response(ll, blk, clear_interval(ll));
      const auto a = awards(ll, r.x);
      const double next = soc + dt * (a.demand - a.supply);
      ok = a.demand - a.supply - a.reserve - a.reg_capacity >= -rate - tol &&
           a.demand - a.supply - a.reserve + a.reg_capacity <= rate + tol &&
           next - dt * (a.reg_capacity + a.reserve) >= bess.soc_min - tol && next + dt * a.reg_capacity <= bess.soc_max + tol;
      if (!ok)
        for (int p = 0; p < 4; ++p) *v[p] *= 0.5;
    }
    if (!ok) return std::nullopt;

    const auto a = awards(ll, r.x);
    soc = soc + dt * (a.demand - a.supply);
    soc = std::clamp(soc, bess.soc_min, bess.soc_max);
    if (blk.s_bid >= 0) x[blk.s_bid] = b.supply;
    if (blk.d_bid >= 0) x[blk.d_bid] = b.demand;
    if (blk.rs_bid >= 0) x[blk.rs_bid] = b.reserve;
    if (blk.rg_bid >= 0) x[blk.rg_bid] = b.regulation;
    if (blk.u >= 0) x[blk.u] = b.supply > 0.0 ? 1.0 : 0.0;
    x[blk.soc] = soc;
    KktSystem kkt = derive_kkt(ll);
    const auto d = kkt.reduced_costs(r.y);
    for (int j = 0; j < ll.num_columns(); ++j) {
      if (r.x[j] > blk.m_value[j] + 1e-9 || d[j] > blk.m_reduced[j] + 1e-9) return std::nullopt;
      x[blk.x[j]] = std::min(r.x[j], blk.m_value[j]);
      x[blk.w[j]] = r.x[j] > 1e-12 ? 1.0 : 0.0;
      if (x[blk.w[j]] == 0.0) x[blk.x[j]] = 0.0;
    }
    // Selectors follow the primal slack; multipliers left on slack rows
    // are face-tolerance residue.
    const auto act = ll.lp.row_activity(r.x);
    for (int rr = 0; rr < ll.num_rows(); ++rr) {
      if (std::abs(r.y[rr]) > blk.m_dual[rr] + 1e-9) return std::nullopt;
      x[blk.y[rr]] = std::clamp(r.y[rr], -blk.m_dual[rr], blk.m_dual[rr]);
      if (blk.z[rr] < 0) continue;
      const double rhs = ll.lp.rows[rr].rhs;
      const bool tight = act[rr] - rhs <= 1e-7 * std::max(1.0, std::abs(rhs));
      x[blk.z[rr]] = tight && r.y[rr] > 1e-12 ? 1.0 : 0.0;
      if (x[blk.z[rr]] == 0.0) x[blk.y[rr]] = 0.0;
    }
  }
  return x;
}

solver::MilpHeuristic make_bilevel_heuristic(const Scenario& s, const BilevelMilp& milp) {
  return [&s, &milp](const std::vector<double>& relax) -> std::optional<std::vector<double>> {
    std::vector<BessQuantityBids> bids;
    for (const auto& b : milp.blocks) {
      BessQuantityBids q{at(relax, b.s_bid), at(relax, b.d_bid), at(relax, b.rs_bid), at(relax, b.rg_bid)};
      if (b.u >= 0) (relax[b.u] >= 0.5 ? q.demand : q.supply) = 0.0;
      bids.push_back(q);
    }
    try {
      return complete_from_bids(s, milp, bids);
    } catch (const ClearingError&) {
      return std::nullopt;
    }
  };
}

std::optional<std::vector<double>> price_taker_start(const Scenario& s, const BilevelMilp& milp) {
  const auto products = bess_products(milp.mask);
  const auto& bess = s.bess;
  const double rate = bess.power_rate;
  LpProblem lp;
  lp.sense = solver::ObjectiveSense::kMaximize;
  struct Cols {
    int s, d, rs, rc, rm, soc;
  };
  std::vector<Cols> cols;
  int prev = -1;
  for (const auto& b : milp.blocks) {
    const auto& iv = s.intervals[b.t];
    const auto rc = clear_interval(build_ll_interval(s, b.t, {}, products));
    const double dt = iv.delta_t;
    const std::string sfx = "[" + std::to_string(b.t + 1) + "]";
    Cols c{};
    c.s = lp.add_column("s" + sfx, dt * rc.prices.energy, 0.0, products[0] ? rate : 0.0);
    c.d = lp.add_column("d" + sfx, -dt * rc.prices.energy, 0.0, products[1] ? rate : 0.0);
    c.rs = lp.add_column("rs" + sfx, dt * rc.prices.reserve, 0.0, products[2] ? std::min(rate, iv.reserve_req) : 0.0);
    c.rc = lp.add_column("rc" + sfx, dt * rc.prices.reg_capacity, 0.0,
                         products[3] ? std::min(rate, iv.regcap_req) : 0.0);
    c.rm = lp.add_column("rm" + sfx, dt * rc.prices.reg_mileage, 0.0, products[3] ? iv.mileage_req : 0.0);
    c.soc = lp.add_column("soc" + sfx, 0.0, bess.soc_min, bess.soc_max);
    lp.add_row("mileage_lo" + sfx, RowSense::kGreaterEqual, 0.0, {{c.rm, 1.0}, {c.rc, -1.0}});
    lp.add_row("mileage_hi" + sfx, RowSense::kGreaterEqual, 0.0, {{c.rc, bess.mileage_multiplier}, {c.rm, -1.0}});
    lp.add_row("net" + sfx, RowSense::kLessEqual, rate, {{c.s, 1.0}, {c.d, 1.0}});
    lp.add_row("U6" + sfx, RowSense::kGreaterEqual, -rate, {{c.d, 1.0}, {c.s, -1.0}, {c.rs, -1.0}, {c.rc, -1.0}});
    lp.add_row("U7" + sfx, RowSense::kLessEqual, rate, {{c.d, 1.0}, {c.s, -1.0}, {c.rs, -1.0}, {c.rc, 1.0}});
    std::vector<std::pair<int, double>> u8{{c.soc, 1.0}, {c.d, -dt}, {c.s, dt}};
    if (prev >= 0) u8.push_back({prev, -1.0});
    lp.add_row("U8" + sfx, RowSense::kEqual, prev < 0 ? bess.soc_init : 0.0, u8);
    lp.add_row("U9" + sfx, RowSense::kGreaterEqual, bess.soc_min, {{c.soc, 1.0}, {c.rc, -dt}, {c.rs, -dt}});
    lp.add_row("U10" + sfx, RowSense::kLessEqual, bess.soc_max, {{c.soc, 1.0}, {c.rc, dt}});
    prev = c.soc;
    cols.push_back(c);
  }
  if (milp.options.terminal_soc && prev >= 0) lp.add_row("SOC_T", RowSense::kEqual, bess.soc_init, {{prev, 1.0}});
  const auto o = solver::solve_lp(lp);
  if (o.status != solver::SolveStatus::kOptimal) return std::nullopt;
  std::vector<BessQuantityBids> bids;
  for (const auto& c : cols) {
    BessQuantityBids q{o.x[c.s], o.x[c.d], o.x[c.rs], o.x[c.rc]};
    if (q.supply > 0.0 && q.demand > 0.0) {
      const double net = q.supply - q.demand;
      q.supply = std::max(0.0, net);
      q.demand = std::max(0.0, -net);
    }
    bids.push_back(q);
  }
  try {
    return complete_from_bids(s, milp, bids);
  } catch (const ClearingError&) {
    return std::nullopt;
  }
}

}  // namespace stratbid
