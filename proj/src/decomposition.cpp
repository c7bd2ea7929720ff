#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "stratbid/bilevel.hpp"
#include "stratbid/simplex.hpp"

namespace stratbid {

using solver::LpProblem;
using solver::MilpProblem;
using solver::RowSense;
using solver::SolveStatus;

namespace {

struct LinkEntry {
  int sub_col;
  double coef;
};

struct LinkRow {
  RowSense sense;
  double rhs;
  std::vector<std::vector<LinkEntry>> by_block;  // indexed by block
};

struct SubProblem {
  MilpProblem milp;
  std::vector<int> full_col;  // sub column -> MILP column
  std::vector<double> cost;   // revenue coefficients
  std::vector<std::vector<double>> points;
};

double dot(const std::vector<LinkEntry>& e, const std::vector<double>& p) {
  double v = 0.0;
  for (const auto& [c, a] : e) v += a * p[c];
  return v;
}

bool has_entries(const std::vector<LinkEntry>& e) { return !e.empty(); }

}  // namespace

DecompositionReport decompose_and_bound(const Scenario& s, BilevelMilp& bm, const DecompositionOptions& opt) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

  auto& full = bm.milp;
  const auto& lp = full.lp;
  const int nb = static_cast<int>(bm.blocks.size());
  const int ncol = lp.num_columns();

  std::vector<int> owner(ncol, -1);
  for (int t = 0; t < nb; ++t) {
    const auto& b = bm.blocks[t];
    for (int c : {b.s_bid, b.d_bid, b.rs_bid, b.rg_bid, b.u, b.soc})
      if (c >= 0) owner[c] = t;
    for (const auto* v : {&b.x, &b.y, &b.z, &b.w})
      for (int c : *v)
        if (c >= 0) owner[c] = t;
  }
  for (int c = 0; c < ncol; ++c)
    if (owner[c] < 0) throw std::logic_error("column " + lp.columns[c].name + " belongs to no interval");

  std::vector<SubProblem> subs(nb);
  std::vector<int> sub_index(ncol, -1);
  for (int c = 0; c < ncol; ++c) {
    auto& sp = subs[owner[c]];
    const auto& col = lp.columns[c];
    sub_index[c] = sp.milp.lp.add_column(col.name, col.cost, col.lower, col.upper);
    sp.milp.is_integer.push_back(full.is_integer[c]);
    sp.milp.priority.push_back(full.priority.empty() ? 0 : full.priority[c]);
    sp.full_col.push_back(c);
    sp.cost.push_back(col.cost);
  }
  for (auto& sp : subs) sp.milp.lp.sense = lp.sense;

  std::vector<std::vector<std::pair<int, double>>> row_entries(lp.num_rows());
  for (const auto& e : lp.coefficients) row_entries[e.row].push_back({e.col, e.value});
  std::vector<LinkRow> links;
  for (int r = 0; r < lp.num_rows(); ++r) {
    const auto& ent = row_entries[r];
    if (ent.empty()) continue;
    const int t0 = owner[ent.front().first];
    const bool local = std::all_of(ent.begin(), ent.end(), [&](auto p) { return owner[p.first] == t0; });
    const auto& row = lp.rows[r];
    if (local) {
      std::vector<std::pair<int, double>> e;
      for (auto [c, a] : ent) e.push_back({sub_index[c], a});
      subs[t0].milp.lp.add_row(row.name, row.sense, row.rhs, e);
    } else {
      LinkRow lr{row.sense, row.rhs, std::vector<std::vector<LinkEntry>>(nb)};
      for (auto [c, a] : ent) lr.by_block[owner[c]].push_back({sub_index[c], a});
      links.push_back(std::move(lr));
    }
  }
  const int nl = static_cast<int>(links.size());

  auto add_point = [&](int t, std::vector<double> p) {
    auto& pts = subs[t].points;
    for (const auto& q : pts) {
      double d = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) d = std::max(d, std::abs(p[i] - q[i]));
      if (d <= 1e-9) return false;
    }
    pts.push_back(std::move(p));
    return true;
  };
  auto split = [&](const std::vector<double>& x) {
    for (int t = 0; t < nb; ++t) {
      std::vector<double> p(subs[t].full_col.size());
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = x[subs[t].full_col[i]];
      add_point(t, std::move(p));
    }
  };

  std::vector<std::vector<double>> starts = opt.starts;
  if (auto z = complete_from_bids(s, bm, std::vector<BessQuantityBids>(nb))) starts.push_back(*z);
  if (auto p = price_taker_start(s, bm)) starts.push_back(*p);
  DecompositionReport rep;
  const double sign = lp.sense == solver::ObjectiveSense::kMaximize ? 1.0 : -1.0;
  auto offer = [&](const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != ncol || !solver::is_milp_feasible(full, x)) return false;
    const double v = full.lp.evaluate_objective(x);
    if (!rep.incumbent || sign * (v - rep.incumbent_value) > 0.0) rep.incumbent = x, rep.incumbent_value = v;
    return true;
  };
  for (const auto& x : starts)
    if (offer(x)) split(x);
  for (int t = 0; t < nb; ++t)
    if (subs[t].points.empty()) throw std::runtime_error("decomposition needs a feasible starting point");

  auto value = [&](int t, const std::vector<double>& p) {
    double v = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) v += subs[t].cost[i] * p[i];
    return v;
  };

  // Master LP over convex combinations of interval points.
  struct Master {
    LpProblem lp;
    std::vector<std::pair<int, int>> lambda;  // (block, point)
  };
  auto build_master = [&] {
    Master m;
    auto& mlp = m.lp;
    mlp.sense = lp.sense;
    for (int t = 0; t < nb; ++t) mlp.add_row("cvx[" + std::to_string(t + 1) + "]", RowSense::kEqual, 1.0);
    for (int i = 0; i < nl; ++i) mlp.add_row("link" + std::to_string(i + 1), links[i].sense, links[i].rhs);
    for (int t = 0; t < nb; ++t)
      for (int k = 0; k < static_cast<int>(subs[t].points.size()); ++k) {
        const auto& p = subs[t].points[k];
        const int c = mlp.add_column("l", value(t, p), 0.0, solver::kInf);
        m.lambda.push_back({t, k});
        mlp.add_coefficient(t, c, 1.0);
        for (int i = 0; i < nl; ++i)
          if (has_entries(links[i].by_block[t])) {
            const double a = dot(links[i].by_block[t], p);
            if (a != 0.0) mlp.add_coefficient(nb + i, c, a);
          }
      }
    return m;
  };

  struct Bound {
    std::vector<double> coef;  // per sub column
    double rhs;
  };
  std::vector<Bound> best_rows(nb);
  bool have_rows = false;
  std::vector<std::vector<double>> weights;  // master weights per interval point
  double best = solver::kInf;

  for (int round = 0; round < opt.max_rounds && elapsed() < opt.time_limit_seconds; ++round) {
    const auto master = build_master();
    const auto mo = solver::solve_lp(master.lp);
    if (mo.status != SolveStatus::kOptimal) throw std::runtime_error("decomposition master did not solve");
    rep.master_value = mo.objective;
    weights.assign(nb, {});
    for (int t = 0; t < nb; ++t) weights[t].assign(subs[t].points.size(), 0.0);
    for (std::size_t c = 0; c < master.lambda.size(); ++c) weights[master.lambda[c].first][master.lambda[c].second] = mo.x[c];
    const std::vector<double> pi(mo.row_duals.begin() + nb, mo.row_duals.end());

    double bound = 0.0;
    for (int i = 0; i < nl; ++i) bound += pi[i] * links[i].rhs;
    std::vector<Bound> rows(nb);
    int added = 0;
    for (int t = 0; t < nb; ++t) {
      auto& sp = subs[t];
      std::vector<double> c = sp.cost;
      for (int i = 0; i < nl; ++i)
        for (const auto& [j, a] : links[i].by_block[t]) c[j] -= pi[i] * a;
      for (std::size_t j = 0; j < c.size(); ++j) sp.milp.lp.columns[j].cost = c[j];
      solver::MilpSettings ms;
      ms.gap_tolerance = 1e-7;
      ms.time_limit_seconds = opt.sub_time_limit_seconds;
      double warm = -solver::kInf;
      for (const auto& p : sp.points) {
        double v = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) v += c[j] * p[j];
        if (v > warm) warm = v, ms.initial_solution = p;
      }
      const auto so = solver::solve_milp(sp.milp, ms);
      if (so.status == SolveStatus::kInfeasible) throw std::runtime_error("interval sub-problem is infeasible");
      rows[t] = {c, so.best_bound + 1e-7 * std::max(1.0, std::abs(so.best_bound))};
      bound += rows[t].rhs;
      if (!so.x.empty() && add_point(t, so.x)) ++added;
    }
    rep.rounds = round + 1;
    if (bound < best) {
      best = bound;
      best_rows = rows;
      have_rows = true;
    }
    rep.bound = best;
    const double gap = (best - rep.master_value) / std::max(1.0, std::abs(rep.master_value));
    if (gap <= opt.tolerance) break;
    if (added == 0) break;
  }

  rep.bound = best;
  for (int t = 0; t < nb && have_rows; ++t) {
    std::vector<std::pair<int, double>> e;
    for (std::size_t j = 0; j < best_rows[t].coef.size(); ++j)
      if (best_rows[t].coef[j] != 0.0) e.push_back({subs[t].full_col[j], best_rows[t].coef[j]});
    full.lp.add_row("RB[" + std::to_string(t + 1) + "]", RowSense::kLessEqual, best_rows[t].rhs, e);
    ++rep.rows_added;
  }
  for (const auto& sp : subs) rep.points += static_cast<int>(sp.points.size());

  // Incumbent: fix the binaries of each interval to its heaviest master
  // point, first everywhere and then only where the master is integral,
  // leaving the remaining intervals to a small branch and bound.
  if (!weights.empty()) {
    std::vector<int> pick(nb, 0);
    std::vector<char> integral(nb, 1);
    for (int t = 0; t < nb; ++t) {
      double w = -1.0;
      for (int k = 0; k < static_cast<int>(weights[t].size()); ++k)
        if (weights[t][k] > w) w = weights[t][k], pick[t] = k;
      integral[t] = w >= 1.0 - 1e-6;
    }
    auto fixed = [&](bool only_integral) {
      MilpProblem p = full;
      for (int t = 0; t < nb; ++t) {
        if (only_integral && !integral[t]) continue;
        const auto& pt = subs[t].points[pick[t]];
        for (std::size_t j = 0; j < pt.size(); ++j) {
          const int c = subs[t].full_col[j];
          if (!p.is_integer[c]) continue;
          p.lp.columns[c].lower = p.lp.columns[c].upper = std::round(pt[j]);
        }
      }
      return p;
    };
    auto consider = [&](const solver::SolveOutcome& o) { offer(o.x); };
    solver::MilpSettings ms;
    ms.gap_tolerance = 1e-6;
    ms.time_limit_seconds = opt.stitch_time_limit_seconds;
    ms.heuristic = make_bilevel_heuristic(s, bm);
    consider(solver::solve_milp(fixed(false), ms));
    if (rep.incumbent) ms.initial_solution = *rep.incumbent;
    if (std::count(integral.begin(), integral.end(), 0) > 0) consider(solver::solve_milp(fixed(true), ms));
  }
  rep.seconds = elapsed();
  return rep;
}

}  // namespace stratbid
