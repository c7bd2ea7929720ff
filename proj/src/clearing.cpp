#include "stratbid/clearing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "stratbid/simplex.hpp"

namespace stratbid {

using solver::LpProblem;
using solver::RowSense;

std::array<bool, 4> bess_products(const MarketMask& mask) {
  return {mask.energy, mask.energy, mask.reserve, mask.regulation};
}

LlInstance build_ll_interval(const Scenario& s, int t, const BessQuantityBids& bids) {
  return build_ll_interval(s, t, bids, bess_products(s.market_mask));
}

LlInstance build_ll_interval(const Scenario& s, int t, const BessQuantityBids& bids,
                             const std::array<bool, 4>& products) {
  if (t < 0 || t >= s.num_intervals()) throw std::out_of_range("interval index out of range");
  for (double b : {bids.supply, bids.demand, bids.reserve, bids.regulation})
    if (!(b >= 0.0) || !std::isfinite(b)) throw std::invalid_argument("BESS quantity bids must be finite and >= 0");

  const auto& iv = s.intervals[t];
  LlInstance inst;
  inst.interval = t;
  inst.delta_t = iv.delta_t;
  inst.num_generators = s.num_generators();
  inst.product_present = products;
  inst.bess_mileage_multiplier = s.bess.mileage_multiplier;
  inst.bids = bids;
  auto& lp = inst.lp;

  for (int j = 0; j < s.num_generators(); ++j) {
    const auto& id = s.generators[j].id;
    const auto& a = iv.generator_bids[j];
    lp.add_column("Pgs[" + id + "]", a.energy, 0.0, solver::kInf);
    lp.add_column("Pgrs[" + id + "]", a.reserve, 0.0, solver::kInf);
    lp.add_column("Pgrgc[" + id + "]", a.reg_capacity, 0.0, solver::kInf);
    lp.add_column("Pgrgm[" + id + "]", a.reg_mileage, 0.0, solver::kInf);
  }
  const auto& beta = iv.bess_bids;
  auto bess = [&](BessVar v, const char* name, double cost) {
    inst.bess_col[static_cast<int>(v)] = lp.add_column(name, cost, 0.0, solver::kInf);
  };
  if (products[0]) bess(BessVar::kSupply, "Pbs", beta.supply);
  if (products[1]) bess(BessVar::kDemand, "Pbd", -beta.demand);
  if (products[2]) bess(BessVar::kReserve, "Pbrs", beta.reserve);
  if (products[3]) {
    bess(BessVar::kRegCapacity, "Pbrgc", beta.reg_capacity);
    bess(BessVar::kRegMileage, "Pbrgm", beta.reg_mileage);
  }

  auto row = [&](const std::string& tag, int gen, int bid, const std::string& suffix, double rhs,
                 const std::vector<std::pair<int, double>>& e, RowSense sense = RowSense::kGreaterEqual) {
    inst.row_info.push_back({tag, gen, bid});
    return lp.add_row(tag + suffix, sense, rhs, e);
  };
  for (int j = 0; j < s.num_generators(); ++j) {
    const auto& g = s.generators[j];
    const std::string sfx = "[" + g.id + "]";
    const int ps = inst.gen_col(j, GenVar::kEnergy), rs = inst.gen_col(j, GenVar::kReserve);
    const int rc = inst.gen_col(j, GenVar::kRegCapacity), rm = inst.gen_col(j, GenVar::kRegMileage);
    row("L2", j, -1, sfx, g.p_min, {{ps, 1.0}, {rc, -1.0}});
    row("L3", j, -1, sfx, -g.p_max, {{ps, -1.0}, {rs, -1.0}, {rc, -1.0}});
    row("L4", j, -1, sfx, -g.reserve_ramp, {{rs, -1.0}});
    row("L5", j, -1, sfx, -g.regulation_ramp, {{rc, -1.0}});
    row("L6", j, -1, sfx, 0.0, {{rm, 1.0}, {rc, -1.0}});
    row("L7", j, -1, sfx, 0.0, {{rc, g.mileage_multiplier}, {rm, -1.0}});
  }
  auto col = [&](BessVar v) { return inst.bess_col[static_cast<int>(v)]; };
  if (products[0]) row("L8", -1, 0, "", -bids.supply, {{col(BessVar::kSupply), -1.0}});
  if (products[1]) row("L9", -1, 1, "", -bids.demand, {{col(BessVar::kDemand), -1.0}});
  if (products[2]) row("L10", -1, 2, "", -bids.reserve, {{col(BessVar::kReserve), -1.0}});
  if (products[3]) {
    const int c = col(BessVar::kRegCapacity), m = col(BessVar::kRegMileage);
    row("L11", -1, 3, "", -bids.regulation, {{c, -1.0}});
    row("L12", -1, -1, "", 0.0, {{m, 1.0}, {c, -1.0}});
    row("L13", -1, -1, "", 0.0, {{c, s.bess.mileage_multiplier}, {m, -1.0}});
  }

  std::vector<std::pair<int, double>> rs_e, rc_e, rm_e, bal_e;
  for (int j = 0; j < s.num_generators(); ++j) {
    rs_e.push_back({inst.gen_col(j, GenVar::kReserve), 1.0});
    rc_e.push_back({inst.gen_col(j, GenVar::kRegCapacity), 1.0});
    rm_e.push_back({inst.gen_col(j, GenVar::kRegMileage), 1.0});
    bal_e.push_back({inst.gen_col(j, GenVar::kEnergy), 1.0});
  }
  if (products[0]) bal_e.push_back({col(BessVar::kSupply), 1.0});
  if (products[1]) bal_e.push_back({col(BessVar::kDemand), -1.0});
  if (products[2]) rs_e.push_back({col(BessVar::kReserve), 1.0});
  if (products[3]) {
    rc_e.push_back({col(BessVar::kRegCapacity), 1.0});
    rm_e.push_back({col(BessVar::kRegMileage), 1.0});
  }
  inst.row_reserve = row("L14", -1, -1, "", iv.reserve_req, rs_e);
  inst.row_regcap = row("L15", -1, -1, "", iv.regcap_req, rc_e);
  inst.row_mileage = row("L16", -1, -1, "", iv.mileage_req, rm_e);
  inst.row_balance = row("L17", -1, -1, "", iv.load, bal_e, RowSense::kEqual);
  return inst;
}

namespace {

double bid_of(const BessQuantityBids& b, int product) {
  switch (product) {
    case 0: return b.supply;
    case 1: return b.demand;
    case 2: return b.reserve;
    default: return b.regulation;
  }
}

// Columns of a product in the full instance.
std::vector<int> product_columns(const LlInstance& inst, int product) {
  auto col = [&](BessVar v) { return inst.bess_col[static_cast<int>(v)]; };
  switch (product) {
    case 0: return {col(BessVar::kSupply)};
    case 1: return {col(BessVar::kDemand)};
    case 2: return {col(BessVar::kReserve)};
    default: return {col(BessVar::kRegCapacity), col(BessVar::kRegMileage)};
  }
}

}  // namespace

ClearingResult clear_interval(const LlInstance& inst) {
  const int n = inst.num_columns(), m = inst.num_rows();
  std::vector<char> drop_col(n, 0), drop_row(m, 0);
  std::array<bool, 4> dropped{};
  for (int p = 0; p < 4; ++p) {
    if (!inst.product_present[p] || bid_of(inst.bids, p) != 0.0) continue;
    dropped[p] = true;
    for (int c : product_columns(inst, p)) drop_col[c] = 1;
  }
  for (int r = 0; r < m; ++r) {
    const auto& tag = inst.row_info[r].tag;
    if ((dropped[0] && tag == "L8") || (dropped[1] && tag == "L9") || (dropped[2] && tag == "L10") ||
        (dropped[3] && (tag == "L11" || tag == "L12" || tag == "L13")))
      drop_row[r] = 1;
  }

  LpProblem reduced;
  std::vector<int> col_map(n, -1), row_map(m, -1);
  for (int j = 0; j < n; ++j)
    if (!drop_col[j]) {
      const auto& c = inst.lp.columns[j];
      col_map[j] = reduced.add_column(c.name, c.cost, c.lower, c.upper);
    }
  for (int r = 0; r < m; ++r)
    if (!drop_row[r]) {
      const auto& row = inst.lp.rows[r];
      row_map[r] = reduced.add_row(row.name, row.sense, row.rhs);
    }
  for (const auto& e : inst.lp.coefficients)
    if (row_map[e.row] >= 0 && col_map[e.col] >= 0) reduced.add_coefficient(row_map[e.row], col_map[e.col], e.value);

  const auto out = solver::solve_lp(reduced);
  if (out.status == solver::SolveStatus::kInfeasible)
    throw ClearingError(inst.interval + 1, "clearing LP is infeasible (requirements exceed fleet capability)");
  if (out.status == solver::SolveStatus::kUnbounded)
    throw ClearingError(inst.interval + 1, "clearing LP is unbounded (malformed bids)");
  if (out.status != solver::SolveStatus::kOptimal)
    throw ClearingError(inst.interval + 1, std::string("clearing LP stopped: ") + std::string(solver::to_string(out.status)));

  ClearingResult res;
  res.interval = inst.interval;
  res.delta_t = inst.delta_t;
  res.x.assign(n, 0.0);
  res.row_duals.assign(m, 0.0);
  for (int j = 0; j < n; ++j)
    if (col_map[j] >= 0) res.x[j] = out.x[col_map[j]];
  for (int r = 0; r < m; ++r)
    if (row_map[r] >= 0) res.row_duals[r] = out.row_duals[row_map[r]];

  auto& y = res.row_duals;
  const double pi_e = y[inst.row_balance], pi_rs = y[inst.row_reserve];
  const double pi_rc = y[inst.row_regcap], pi_rm = y[inst.row_mileage];
  auto cost = [&](BessVar v) { return inst.lp.columns[inst.bess_col[static_cast<int>(v)]].cost; };
  for (int r = 0; r < m; ++r) {
    if (!drop_row[r]) continue;
    const auto& tag = inst.row_info[r].tag;
    if (tag == "L8") y[r] = std::max(0.0, pi_e - cost(BessVar::kSupply));
    else if (tag == "L9") y[r] = std::max(0.0, -cost(BessVar::kDemand) - pi_e);
    else if (tag == "L10") y[r] = std::max(0.0, pi_rs - cost(BessVar::kReserve));
  }
  if (dropped[3]) {
    const double mu13 = std::max(0.0, pi_rm - cost(BessVar::kRegMileage));
    const double mu11 = std::max(0.0, pi_rc - cost(BessVar::kRegCapacity) + inst.bess_mileage_multiplier * mu13);
    for (int r = 0; r < m; ++r) {
      if (!drop_row[r]) continue;
      const auto& tag = inst.row_info[r].tag;
      if (tag == "L11") y[r] = mu11;
      else if (tag == "L12") y[r] = 0.0;
      else if (tag == "L13") y[r] = mu13;
    }
  }

  for (int j = 0; j < inst.num_generators; ++j)
    res.generators.push_back({res.x[inst.gen_col(j, GenVar::kEnergy)], res.x[inst.gen_col(j, GenVar::kReserve)],
                              res.x[inst.gen_col(j, GenVar::kRegCapacity)],
                              res.x[inst.gen_col(j, GenVar::kRegMileage)]});
  auto val = [&](BessVar v) {
    const int c = inst.bess_col[static_cast<int>(v)];
    return c < 0 ? 0.0 : res.x[c];
  };
  res.bess = {val(BessVar::kSupply), val(BessVar::kDemand), val(BessVar::kReserve), val(BessVar::kRegCapacity),
              val(BessVar::kRegMileage)};
  res.prices = {pi_e, pi_rs, pi_rc, pi_rm};
  res.objective = inst.delta_t * out.objective;
  const auto kkt = ll_kkt_residuals(inst, res.x, res.row_duals);
  res.duality_gap = kkt.duality_gap;
  res.complementarity = kkt.complementarity;
  return res;
}

std::vector<ClearingResult> clear_horizon(const Scenario& s, const std::vector<BessQuantityBids>& bids) {
  if (static_cast<int>(bids.size()) != s.num_intervals())
    throw std::invalid_argument("one bid set per interval is required");
  std::vector<ClearingResult> out;
  out.reserve(bids.size());
  for (int t = 0; t < s.num_intervals(); ++t) out.push_back(clear_interval(build_ll_interval(s, t, bids[t])));
  return out;
}

KktResiduals ll_kkt_residuals(const LlInstance& inst, const std::vector<double>& x, const std::vector<double>& y) {
  const auto& lp = inst.lp;
  KktResiduals r;
  r.primal = lp.max_violation(x);
  std::vector<double> d(lp.num_columns());
  for (int j = 0; j < lp.num_columns(); ++j) d[j] = lp.columns[j].cost;
  for (const auto& e : lp.coefficients) d[e.col] -= e.value * y[e.row];
  const auto act = lp.row_activity(x);
  double primal_obj = 0.0, dual_obj = 0.0;
  for (int j = 0; j < lp.num_columns(); ++j) {
    r.dual = std::max(r.dual, -d[j]);
    r.complementarity = std::max(r.complementarity, std::abs(d[j] * x[j]));
    primal_obj += lp.columns[j].cost * x[j];
  }
  for (int i = 0; i < lp.num_rows(); ++i) {
    dual_obj += lp.rows[i].rhs * y[i];
    if (lp.rows[i].sense == RowSense::kEqual) continue;
    r.dual = std::max(r.dual, -y[i]);
    r.complementarity = std::max(r.complementarity, std::abs(y[i] * (act[i] - lp.rows[i].rhs)));
  }
  r.duality_gap = std::abs(primal_obj - dual_obj) / std::max(1.0, std::abs(primal_obj));
  return r;
}

void write_clearing_csv(const std::vector<ClearingResult>& results, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::size_t g = results.empty() ? 0 : results.front().generators.size();
  out << "interval,delta_t_h";
  for (std::size_t j = 0; j < g; ++j)
    out << ",g" << j + 1 << "_energy_mw,g" << j + 1 << "_reserve_mw,g" << j + 1 << "_regcap_mw,g" << j + 1
        << "_mileage_mw";
  out << ",bess_supply_mw,bess_demand_mw,bess_reserve_mw,bess_regcap_mw,bess_mileage_mw"
         ",price_energy,price_reserve,price_regcap,price_mileage,objective_usd\n";
  char buf[64];
  auto num = [&](double v) {
    if (v == 0.0) v = 0.0;  // no negative zero
    std::snprintf(buf, sizeof buf, ",%.10g", v);
    out << buf;
  };
  for (const auto& r : results) {
    out << r.interval + 1;
    num(r.delta_t);
    for (const auto& a : r.generators) {
      num(a.energy);
      num(a.reserve);
      num(a.reg_capacity);
      num(a.reg_mileage);
    }
    for (double v : {r.bess.supply, r.bess.demand, r.bess.reserve, r.bess.reg_capacity, r.bess.reg_mileage}) num(v);
    for (double v : {r.prices.energy, r.prices.reserve, r.prices.reg_capacity, r.prices.reg_mileage}) num(v);
    num(r.objective);
    out << '\n';
  }
}

}  // namespace stratbid
