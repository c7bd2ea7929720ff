#include "stratbid/simplex.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stratbid::solver {

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kGapLimit: return "gap-limit";
    case SolveStatus::kTimeLimit: return "time-limit";
    case SolveStatus::kIterationLimit: return "iteration-limit";
  }
  return "unknown";
}

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Clock = std::chrono::steady_clock;
// Multiple of the primal tolerance accepted when phase 1 stalls.
constexpr double kLooseTolerance = 100.0;

double pow2_round(double s) {
  if (!std::isfinite(s) || s <= 0.0) return 1.0;
  return std::exp2(std::round(std::log2(s)));
}

}  // namespace

struct SimplexEngine::Impl {
  LpSettings cfg;
  int m = 0;
  int n = 0;
  int total = 0;
  bool maximize = false;
  double offset = 0.0;

  std::vector<int> col_start;
  std::vector<int> row_index;
  std::vector<double> value;
  std::vector<double> row_scale;
  double tol_scale = 1.0;  // raised when phase 1 stalls on round-off sized infeasibilities
  std::vector<double> col_scale;

  std::vector<double> lb, ub, cost;
  std::vector<double> x;
  std::vector<VarStatus> status;
  std::vector<int> head;

  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  bool factored = false;
  struct Eta {
    int r = 0;
    double pivot = 1.0;
    std::vector<int> idx;
    std::vector<double> val;
  };
  std::vector<Eta> etas;

  std::vector<double> y;
  std::vector<double> d;
  Clock::time_point deadline = Clock::time_point::max();
  long iters = 0;

  explicit Impl(const LpProblem& p, LpSettings s) : cfg(s) {
    p.validate();
    m = p.num_rows();
    n = p.num_columns();
    total = n + m;
    maximize = p.sense == ObjectiveSense::kMaximize;
    offset = p.objective_offset;

    // Column-major copy with duplicates summed.
    std::vector<std::vector<std::pair<int, double>>> cols(n);
    for (const auto& c : p.coefficients) cols[c.col].push_back({c.row, c.value});
    col_start.assign(n + 1, 0);
    for (int j = 0; j < n; ++j) {
      auto& v = cols[j];
      std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.first < b.first; });
      std::vector<std::pair<int, double>> merged;
      for (const auto& e : v) {
        if (!merged.empty() && merged.back().first == e.first) merged.back().second += e.second;
        else merged.push_back(e);
      }
      for (const auto& e : merged) {
        if (e.second == 0.0) continue;
        row_index.push_back(e.first);
        value.push_back(e.second);
      }
      col_start[j + 1] = static_cast<int>(row_index.size());
    }

    row_scale.assign(m, 1.0);
    col_scale.assign(n, 1.0);
    if (cfg.scale) compute_scaling();
    for (int j = 0; j < n; ++j)
      for (int k = col_start[j]; k < col_start[j + 1]; ++k)
        value[k] *= row_scale[row_index[k]] * col_scale[j];

    lb.assign(total, 0.0);
    ub.assign(total, 0.0);
    cost.assign(total, 0.0);
    for (int j = 0; j < n; ++j) {
      const auto& c = p.columns[j];
      lb[j] = c.lower / col_scale[j];
      ub[j] = c.upper / col_scale[j];
      cost[j] = (maximize ? -c.cost : c.cost) * col_scale[j];
    }
    for (int i = 0; i < m; ++i) {
      const auto& r = p.rows[i];
      const double rhs = r.rhs * row_scale[i];
      switch (r.sense) {
        case RowSense::kLessEqual: lb[n + i] = -kInf; ub[n + i] = rhs; break;
        case RowSense::kGreaterEqual: lb[n + i] = rhs; ub[n + i] = kInf; break;
        case RowSense::kEqual: lb[n + i] = rhs; ub[n + i] = rhs; break;
      }
    }
    slack_basis();
  }

  void compute_scaling() {
    for (int pass = 0; pass < 6; ++pass) {
      std::vector<double> rmin(m, kInf), rmax(m, 0.0);
      for (int j = 0; j < n; ++j)
        for (int k = col_start[j]; k < col_start[j + 1]; ++k) {
          const double a = std::abs(value[k]) * col_scale[j];
          rmin[row_index[k]] = std::min(rmin[row_index[k]], a);
          rmax[row_index[k]] = std::max(rmax[row_index[k]], a);
        }
      for (int i = 0; i < m; ++i)
        if (rmax[i] > 0.0) row_scale[i] = 1.0 / std::sqrt(rmin[i] * rmax[i]);
      for (int j = 0; j < n; ++j) {
        double cmin = kInf, cmax = 0.0;
        for (int k = col_start[j]; k < col_start[j + 1]; ++k) {
          const double a = std::abs(value[k]) * row_scale[row_index[k]];
          cmin = std::min(cmin, a);
          cmax = std::max(cmax, a);
        }
        if (cmax > 0.0) col_scale[j] = 1.0 / std::sqrt(cmin * cmax);
      }
    }
    for (auto& s : row_scale) s = pow2_round(s);
    for (auto& s : col_scale) s = pow2_round(s);
  }

  bool fixed(int j) const { return lb[j] == ub[j]; }

  double nonbasic_value(int j) const {
    switch (status[j]) {
      case VarStatus::kAtLower: return lb[j];
      case VarStatus::kAtUpper: return ub[j];
      default: return 0.0;
    }
  }

  VarStatus default_status(int j) const {
    if (std::isfinite(lb[j])) return VarStatus::kAtLower;
    if (std::isfinite(ub[j])) return VarStatus::kAtUpper;
    return VarStatus::kAtZero;
  }

  void normalize_nonbasic(int j) {
    if (status[j] == VarStatus::kBasic) return;
    if (status[j] == VarStatus::kAtLower && !std::isfinite(lb[j])) status[j] = default_status(j);
    if (status[j] == VarStatus::kAtUpper && !std::isfinite(ub[j])) status[j] = default_status(j);
    if (status[j] == VarStatus::kAtZero && (std::isfinite(lb[j]) || std::isfinite(ub[j])))
      status[j] = default_status(j);
    x[j] = nonbasic_value(j);
  }

  void slack_basis() {
    status.assign(total, VarStatus::kAtLower);
    x.assign(total, 0.0);
    head.resize(m);
    for (int j = 0; j < n; ++j) {
      status[j] = default_status(j);
      x[j] = nonbasic_value(j);
    }
    for (int i = 0; i < m; ++i) {
      status[n + i] = VarStatus::kBasic;
      head[i] = n + i;
    }
    factored = false;
  }

  template <class F>
  void for_column(int j, F&& f) const {
    if (j < n) {
      for (int k = col_start[j]; k < col_start[j + 1]; ++k) f(row_index[k], value[k]);
    } else {
      f(j - n, -1.0);
    }
  }

  double column_dot(int j, const std::vector<double>& v) const {
    if (j >= n) return -v[j - n];
    double s = 0.0;
    for (int k = col_start[j]; k < col_start[j + 1]; ++k) s += value[k] * v[row_index[k]];
    return s;
  }

  bool refactor() {
    etas.clear();
    factored = false;
    if (m == 0) {
      factored = true;
      return true;
    }
    std::vector<Eigen::Triplet<double>> trip;
    for (int r = 0; r < m; ++r) for_column(head[r], [&](int i, double a) { trip.emplace_back(i, r, a); });
    SpMat basis(m, m);
    basis.setFromTriplets(trip.begin(), trip.end());
    basis.makeCompressed();
    lu.analyzePattern(basis);
    lu.factorize(basis);
    if (lu.info() != Eigen::Success) return false;
    factored = true;
    return true;
  }

  // Recover from a singular basis by restarting from the all-logical basis.
  void ensure_factor() {
    if (factored) return;
    if (!refactor()) {
      slack_basis();
      refactor();
    }
    compute_basic_values();
  }

  void ftran(std::vector<double>& v) const {
    if (m == 0) return;
    Eigen::Map<Eigen::VectorXd> vm(v.data(), m);
    Eigen::VectorXd sol = lu.solve(vm);
    vm = sol;
    for (const auto& e : etas) {
      const double xr = v[e.r] / e.pivot;
      if (xr != 0.0)
        for (std::size_t k = 0; k < e.idx.size(); ++k) v[e.idx[k]] -= e.val[k] * xr;
      v[e.r] = xr;
    }
  }

  void btran(std::vector<double>& v) const {
    if (m == 0) return;
    for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
      double s = v[it->r];
      for (std::size_t k = 0; k < it->idx.size(); ++k) s -= it->val[k] * v[it->idx[k]];
      v[it->r] = s / it->pivot;
    }
    Eigen::Map<Eigen::VectorXd> vm(v.data(), m);
    Eigen::VectorXd sol = lu.transpose().solve(vm);
    vm = sol;
  }

  void compute_basic_values() {
    std::vector<double> rhs(m, 0.0);
    for (int j = 0; j < total; ++j) {
      if (status[j] == VarStatus::kBasic) continue;
      x[j] = nonbasic_value(j);
      if (x[j] != 0.0) for_column(j, [&](int i, double a) { rhs[i] -= a * x[j]; });
    }
    ftran(rhs);
    for (int r = 0; r < m; ++r) x[head[r]] = rhs[r];
  }

  void column(int j, std::vector<double>& out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for_column(j, [&](int i, double a) { out[i] += a; });
  }

  void push_eta(int r, const std::vector<double>& alpha) {
    Eta e;
    e.r = r;
    e.pivot = alpha[r];
    for (int i = 0; i < m; ++i)
      if (i != r && alpha[i] != 0.0) {
        e.idx.push_back(i);
        e.val.push_back(alpha[i]);
      }
    etas.push_back(std::move(e));
  }

  void pivot(int r, int q, const std::vector<double>& alpha, double leave_value, bool leave_upper) {
    const int v = head[r];
    x[v] = leave_value;
    status[v] = leave_upper ? VarStatus::kAtUpper : VarStatus::kAtLower;
    if (fixed(v)) status[v] = VarStatus::kAtLower;
    head[r] = q;
    status[q] = VarStatus::kBasic;
    push_eta(r, alpha);
    if (static_cast<int>(etas.size()) >= cfg.refactor_interval) {
      if (!refactor()) {
        slack_basis();
        refactor();
      }
      compute_basic_values();
    }
  }

  // Primal tolerance relative to the bound magnitude.
  double below_tol(int v) const { return tol_scale * cfg.primal_tolerance * std::max(1.0, std::abs(lb[v])); }
  double above_tol(int v) const { return tol_scale * cfg.primal_tolerance * std::max(1.0, std::abs(ub[v])); }
  bool below(int v) const { return x[v] < lb[v] - below_tol(v); }
  bool above(int v) const { return x[v] > ub[v] + above_tol(v); }

  double infeasibility(int v) const {
    if (below(v)) return lb[v] - x[v];
    if (above(v)) return x[v] - ub[v];
    return 0.0;
  }

  double max_infeasibility_ratio() const {
    double worst = 0.0;
    for (int r = 0; r < m; ++r) {
      const int v = head[r];
      if (x[v] < lb[v]) worst = std::max(worst, (lb[v] - x[v]) / (cfg.primal_tolerance * std::max(1.0, std::abs(lb[v]))));
      if (x[v] > ub[v]) worst = std::max(worst, (x[v] - ub[v]) / (cfg.primal_tolerance * std::max(1.0, std::abs(ub[v]))));
    }
    return worst;
  }

  bool primal_feasible() const {
    for (int r = 0; r < m; ++r)
      if (infeasibility(head[r]) > 0.0) return false;
    return true;
  }

  void compute_duals() {
    y.assign(m, 0.0);
    for (int r = 0; r < m; ++r) y[r] = cost[head[r]];
    btran(y);
    d.assign(total, 0.0);
    for (int j = 0; j < total; ++j)
      if (status[j] != VarStatus::kBasic) d[j] = cost[j] - column_dot(j, y);
  }

  bool dual_infeasible(int j) const {
    if (status[j] == VarStatus::kBasic || fixed(j)) return false;
    const double tol = cfg.dual_tolerance;
    switch (status[j]) {
      case VarStatus::kAtLower: return d[j] < -tol;
      case VarStatus::kAtUpper: return d[j] > tol;
      default: return std::abs(d[j]) > tol;
    }
  }

  // Moves boxed nonbasics to the bound matching their reduced-cost sign.
  // Returns false when some dual infeasibility cannot be repaired that way.
  bool flip_to_dual_feasible() {
    bool ok = true;
    bool moved = false;
    for (int j = 0; j < total; ++j) {
      if (!dual_infeasible(j)) continue;
      if (std::isfinite(lb[j]) && std::isfinite(ub[j])) {
        status[j] = d[j] < 0.0 ? VarStatus::kAtUpper : VarStatus::kAtLower;
        moved = true;
      } else {
        ok = false;
      }
    }
    if (moved) compute_basic_values();
    return ok;
  }

  bool out_of_time() const { return Clock::now() > deadline; }

  SolveStatus primal_simplex() {
    const double ptol = cfg.primal_tolerance;
    const double dtol = cfg.dual_tolerance;
    std::vector<double> alpha(m);
    std::vector<double> cb(m);
    int stall = 0;
    bool bland = false;
    while (true) {
      if (iters >= cfg.iteration_limit) return SolveStatus::kIterationLimit;
      if (out_of_time()) return SolveStatus::kTimeLimit;

      bool phase1 = false;
      for (int r = 0; r < m; ++r) {
        const int v = head[r];
        if (below(v)) { cb[r] = -1.0; phase1 = true; }
        else if (above(v)) { cb[r] = 1.0; phase1 = true; }
        else cb[r] = 0.0;
      }
      if (!phase1)
        for (int r = 0; r < m; ++r) cb[r] = cost[head[r]];
      y = cb;
      btran(y);

      int q = -1;
      double best = 0.0;
      double dq = 0.0;
      for (int j = 0; j < total; ++j) {
        if (status[j] == VarStatus::kBasic || fixed(j)) continue;
        const double cj = phase1 ? 0.0 : cost[j];
        const double dj = cj - column_dot(j, y);
        bool eligible = false;
        switch (status[j]) {
          case VarStatus::kAtLower: eligible = dj < -dtol; break;
          case VarStatus::kAtUpper: eligible = dj > dtol; break;
          default: eligible = std::abs(dj) > dtol; break;
        }
        if (!eligible) continue;
        if (bland) {
          q = j;
          dq = dj;
          break;
        }
        const double score = std::abs(dj);
        if (score > best) {
          best = score;
          q = j;
          dq = dj;
        }
      }
      if (q < 0) return phase1 ? SolveStatus::kInfeasible : SolveStatus::kOptimal;

      const double dir = dq < 0.0 ? 1.0 : -1.0;
      column(q, alpha);
      ftran(alpha);

      // Ratio test. Harris two-pass unless Bland's rule is active.
      double theta = kInf;
      int leave = -1;
      bool leave_upper = false;
      if (std::isfinite(lb[q]) && std::isfinite(ub[q])) theta = ub[q] - lb[q];
      const double flip_theta = theta;

      auto candidate = [&](int r, double tol, double& t, bool& to_upper) -> bool {
        const double a = alpha[r];
        if (std::abs(a) < cfg.pivot_tolerance) return false;
        const double rate = -dir * a;
        const int v = head[r];
        const double xv = x[v];
        if (phase1 && below(v)) {
          if (rate <= 0.0) return false;
          t = (lb[v] - xv) / rate;
          to_upper = false;
          return true;
        }
        if (phase1 && above(v)) {
          if (rate >= 0.0) return false;
          t = (xv - ub[v]) / -rate;
          to_upper = true;
          return true;
        }
        if (rate < 0.0 && std::isfinite(lb[v])) {
          t = (xv - lb[v] + tol) / -rate;
          to_upper = false;
          return true;
        }
        if (rate > 0.0 && std::isfinite(ub[v])) {
          t = (ub[v] - xv + tol) / rate;
          to_upper = true;
          return true;
        }
        return false;
      };

      if (bland) {
        for (int r = 0; r < m; ++r) {
          double t;
          bool up;
          if (!candidate(r, 0.0, t, up)) continue;
          t = std::max(t, 0.0);
          if (t < theta || (t == theta && leave >= 0 && head[r] < head[leave])) {
            theta = t;
            leave = r;
            leave_upper = up;
          }
        }
      } else {
        double tmax = flip_theta;
        for (int r = 0; r < m; ++r) {
          double t;
          bool up;
          if (candidate(r, ptol, t, up)) tmax = std::min(tmax, t);
        }
        if (std::isfinite(tmax)) {
          double best_pivot = 0.0;
          for (int r = 0; r < m; ++r) {
            double t;
            bool up;
            if (!candidate(r, 0.0, t, up)) continue;
            if (t <= tmax && std::abs(alpha[r]) > best_pivot) {
              best_pivot = std::abs(alpha[r]);
              leave = r;
              leave_upper = up;
              theta = std::max(t, 0.0);
            }
          }
          if (leave >= 0 && flip_theta <= theta) leave = -1;
          if (leave < 0) theta = flip_theta;
        }
      }

      if (!std::isfinite(theta)) {
        if (phase1) return SolveStatus::kInfeasible;  // numerically stuck
        return SolveStatus::kUnbounded;
      }

      ++iters;
      if (theta <= 1e-12) {
        if (++stall > cfg.stall_limit) bland = true;
      } else {
        stall = 0;
        bland = false;
      }

      x[q] += dir * theta;
      if (theta != 0.0)
        for (int r = 0; r < m; ++r) x[head[r]] -= dir * theta * alpha[r];
      if (leave < 0) {
        status[q] = dir > 0 ? VarStatus::kAtUpper : VarStatus::kAtLower;
        x[q] = nonbasic_value(q);
        continue;
      }
      const int v = head[leave];
      pivot(leave, q, alpha, leave_upper ? ub[v] : lb[v], leave_upper);
    }
  }

  SolveStatus dual_simplex() {
    const double dtol = cfg.dual_tolerance;
    std::vector<double> rho(m);
    std::vector<double> alpha(m);
    std::vector<double> row(total);
    int stall = 0;
    int degenerate = 0;  // iterations without objective progress
    double best_obj = -kInf;
    bool bland = false;  // smallest-index rule after a stall
    while (true) {
      if (iters >= cfg.iteration_limit) return SolveStatus::kIterationLimit;
      if (out_of_time()) return SolveStatus::kTimeLimit;
      compute_duals();

      int r = -1;
      double worst = 0.0;
      for (int i = 0; i < m; ++i) {
        const double inf = infeasibility(head[i]);
        if (inf <= 0.0) continue;
        if (bland ? (r < 0 || head[i] < head[r]) : inf > worst) {
          worst = inf;
          r = i;
        }
      }
      if (r < 0) return SolveStatus::kOptimal;

      const int v = head[r];
      const bool below = x[v] < lb[v];
      const double sv = below ? 1.0 : -1.0;
      std::fill(rho.begin(), rho.end(), 0.0);
      rho[r] = 1.0;
      btran(rho);

      auto eligible = [&](int j, double a) -> bool {
        if (std::abs(a) < cfg.pivot_tolerance) return false;
        switch (status[j]) {
          case VarStatus::kAtLower: return a * sv < 0.0;
          case VarStatus::kAtUpper: return a * sv > 0.0;
          default: return true;
        }
      };
      auto dual_slack = [&](int j) {
        switch (status[j]) {
          case VarStatus::kAtLower: return std::max(d[j], 0.0);
          case VarStatus::kAtUpper: return std::max(-d[j], 0.0);
          default: return std::abs(d[j]);
        }
      };

      double tmax = kInf;
      for (int j = 0; j < total; ++j) {
        if (status[j] == VarStatus::kBasic || fixed(j)) {
          row[j] = 0.0;
          continue;
        }
        row[j] = column_dot(j, rho);
        if (!eligible(j, row[j])) continue;
        tmax = std::min(tmax, (dual_slack(j) + dtol) / std::abs(row[j]));
      }
      if (!std::isfinite(tmax)) return SolveStatus::kInfeasible;
      int q = -1;
      if (bland) {
        double tmin = kInf;
        for (int j = 0; j < total; ++j) {
          if (status[j] == VarStatus::kBasic || fixed(j) || !eligible(j, row[j])) continue;
          tmin = std::min(tmin, dual_slack(j) / std::abs(row[j]));
        }
        for (int j = 0; j < total && q < 0; ++j) {
          if (status[j] == VarStatus::kBasic || fixed(j) || !eligible(j, row[j])) continue;
          if (dual_slack(j) / std::abs(row[j]) <= tmin + 1e-12) q = j;
        }
      } else {
        double best_pivot = 0.0;
        for (int j = 0; j < total; ++j) {
          if (status[j] == VarStatus::kBasic || fixed(j)) continue;
          if (!eligible(j, row[j])) continue;
          if (dual_slack(j) / std::abs(row[j]) <= tmax && std::abs(row[j]) > best_pivot) {
            best_pivot = std::abs(row[j]);
            q = j;
          }
        }
      }
      if (q < 0) return SolveStatus::kInfeasible;
      double obj = 0.0;
      for (int j = 0; j < total; ++j) obj += cost[j] * x[j];
      if (obj > best_obj + 1e-9 * std::max(1.0, std::abs(best_obj))) {
        best_obj = obj;
        degenerate = 0;
        bland = false;
      } else if (++degenerate > std::max(cfg.stall_limit, m)) {
        bland = true;
      }

      column(q, alpha);
      ftran(alpha);
      if (std::abs(alpha[r]) < cfg.pivot_tolerance) {
        // Inconsistent pivot between row and column; refresh the factor.
        if (!refactor()) {
          slack_basis();
          refactor();
        }
        compute_basic_values();
        if (++stall > 5) return SolveStatus::kIterationLimit;
        continue;
      }
      ++iters;
      const double target = below ? lb[v] : ub[v];
      const double dxq = (x[v] - target) / alpha[r];
      x[q] += dxq;
      for (int i = 0; i < m; ++i) x[head[i]] -= dxq * alpha[i];
      pivot(r, q, alpha, target, !below);
    }
  }

  void ensure_nonbasic_consistency() {
    for (int j = 0; j < total; ++j) normalize_nonbasic(j);
  }

  SolveStatus solve_unconstrained() {
    for (int j = 0; j < n; ++j) {
      if (cost[j] > 0.0) {
        if (!std::isfinite(lb[j])) return SolveStatus::kUnbounded;
        status[j] = VarStatus::kAtLower;
      } else if (cost[j] < 0.0) {
        if (!std::isfinite(ub[j])) return SolveStatus::kUnbounded;
        status[j] = VarStatus::kAtUpper;
      } else {
        status[j] = default_status(j);
      }
      x[j] = nonbasic_value(j);
    }
    d = cost;
    y.clear();
    return SolveStatus::kOptimal;
  }

  SolveStatus solve() {
    for (int j = 0; j < total; ++j)
      if (lb[j] > ub[j] + cfg.primal_tolerance) return SolveStatus::kInfeasible;
    if (m == 0) return solve_unconstrained();
    tol_scale = 1.0;
    ensure_nonbasic_consistency();
    if (!refactor()) {
      slack_basis();
      refactor();
    }
    compute_basic_values();

    SolveStatus st = SolveStatus::kOptimal;
    for (int round = 0; round < 4; ++round) {
      compute_duals();
      if (primal_feasible()) {
        st = primal_simplex();
      } else {
        const bool dual_ok = flip_to_dual_feasible();
        st = dual_ok ? dual_simplex() : primal_simplex();
        if (dual_ok && st == SolveStatus::kOptimal) st = primal_simplex();
      }
      if (st == SolveStatus::kInfeasible && tol_scale == 1.0 && max_infeasibility_ratio() <= kLooseTolerance) {
        tol_scale = kLooseTolerance;
        if (!refactor()) {
          slack_basis();
          refactor();
        }
        compute_basic_values();
        continue;
      }
      if (st != SolveStatus::kOptimal) {
        if (st == SolveStatus::kInfeasible && round == 0) {
          // Confirm infeasibility from a fresh factorization.
          if (!refactor()) {
            slack_basis();
            refactor();
          }
          compute_basic_values();
          st = primal_simplex();
          if (st != SolveStatus::kOptimal) return st;
        } else {
          return st;
        }
      }
      if (!refactor()) {
        slack_basis();
        refactor();
        compute_basic_values();
        continue;
      }
      compute_basic_values();
      if (!primal_feasible()) continue;
      compute_duals();
      bool dual_ok = true;
      for (int j = 0; j < total && dual_ok; ++j) dual_ok = !dual_infeasible(j);
      if (dual_ok) return SolveStatus::kOptimal;
    }
    return st;
  }
};

SimplexEngine::SimplexEngine(const LpProblem& problem, LpSettings settings)
    : impl_(std::make_unique<Impl>(problem, settings)) {}

SimplexEngine::~SimplexEngine() = default;

void SimplexEngine::set_column_bounds(int col, double lower, double upper) {
  auto& s = *impl_;
  s.lb[col] = lower / s.col_scale[col];
  s.ub[col] = upper / s.col_scale[col];
  if (s.status[col] != VarStatus::kBasic) {
    s.normalize_nonbasic(col);
  }
}

double SimplexEngine::column_lower(int col) const { return impl_->lb[col] * impl_->col_scale[col]; }
double SimplexEngine::column_upper(int col) const { return impl_->ub[col] * impl_->col_scale[col]; }

void SimplexEngine::set_deadline(std::chrono::steady_clock::time_point deadline) {
  impl_->deadline = deadline;
}

SolveStatus SimplexEngine::solve() {
  const long before = impl_->iters;
  const auto st = impl_->solve();
  iterations_ += impl_->iters - before;
  return st;
}

Basis SimplexEngine::basis() const { return impl_->status; }

void SimplexEngine::set_basis(const Basis& basis) {
  auto& s = *impl_;
  if (static_cast<int>(basis.size()) != s.total) throw std::invalid_argument("basis size mismatch");
  int count = 0;
  for (auto b : basis) count += b == VarStatus::kBasic;
  if (count != s.m) {
    s.slack_basis();
    return;
  }
  s.status = basis;
  int r = 0;
  for (int j = 0; j < s.total; ++j)
    if (s.status[j] == VarStatus::kBasic) s.head[r++] = j;
  s.factored = false;
}

std::vector<double> SimplexEngine::primal() const {
  const auto& s = *impl_;
  std::vector<double> out(s.n);
  for (int j = 0; j < s.n; ++j) out[j] = s.x[j] * s.col_scale[j];
  return out;
}

std::vector<double> SimplexEngine::row_duals() const {
  const auto& s = *impl_;
  std::vector<double> out(s.m, 0.0);
  const double sign = s.maximize ? -1.0 : 1.0;
  for (int i = 0; i < s.m && i < static_cast<int>(s.y.size()); ++i) out[i] = sign * s.y[i] * s.row_scale[i];
  return out;
}

std::vector<double> SimplexEngine::reduced_costs() const {
  const auto& s = *impl_;
  std::vector<double> out(s.n, 0.0);
  const double sign = s.maximize ? -1.0 : 1.0;
  for (int j = 0; j < s.n && j < static_cast<int>(s.d.size()); ++j) out[j] = sign * s.d[j] / s.col_scale[j];
  return out;
}

double SimplexEngine::objective() const {
  const auto& s = *impl_;
  double obj = 0.0;
  for (int j = 0; j < s.n; ++j) obj += s.cost[j] * s.x[j];
  return (s.maximize ? -obj : obj) + s.offset;
}

namespace {

// Values within a tiny band of a bound are reported exactly at the bound.
void snap_to_bounds(const LpProblem& p, std::vector<double>& x) {
  for (int j = 0; j < p.num_columns(); ++j) {
    const auto& c = p.columns[j];
    const double band = 1e-9 * std::max(1.0, std::abs(x[j]));
    if (std::isfinite(c.lower) && std::abs(x[j] - c.lower) <= band) x[j] = c.lower;
    if (std::isfinite(c.upper) && std::abs(x[j] - c.upper) <= band) x[j] = c.upper;
  }
}

}  // namespace

SolveOutcome solve_lp(const LpProblem& problem, const LpSettings& settings) {
  const auto start = Clock::now();
  SimplexEngine engine(problem, settings);
  if (settings.time_limit_seconds < 1e29)
    engine.set_deadline(start + std::chrono::duration_cast<Clock::duration>(
                                    std::chrono::duration<double>(settings.time_limit_seconds)));
  SolveOutcome out;
  out.status = engine.solve();
  out.iterations = engine.iterations();
  if (out.status == SolveStatus::kOptimal) {
    out.x = engine.primal();
    snap_to_bounds(problem, out.x);
    out.row_duals = engine.row_duals();
    out.reduced_costs = engine.reduced_costs();
    out.row_activity = problem.row_activity(out.x);
    out.objective = problem.evaluate_objective(out.x);
    out.best_bound = out.objective;
  }
  out.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return out;
}

double duality_gap(const LpProblem& p, const SolveOutcome& o) {
  // Dual objective: sum of y_i * rhs_i plus reduced costs at the bound the
  // column sits on (or at its value when it sits at neither).
  double dual = p.objective_offset;
  for (int i = 0; i < p.num_rows(); ++i) dual += o.row_duals[i] * p.rows[i].rhs;
  for (int j = 0; j < p.num_columns(); ++j) {
    const auto& c = p.columns[j];
    const double dj = o.reduced_costs[j];
    double at = o.x[j];
    if (std::isfinite(c.lower) && std::abs(o.x[j] - c.lower) <= std::abs(o.x[j] - c.upper)) at = c.lower;
    else if (std::isfinite(c.upper)) at = c.upper;
    dual += dj * at;
  }
  const double primal = o.objective;
  return std::abs(primal - dual) / std::max(1.0, std::abs(primal));
}

double complementarity_residual(const LpProblem& p, const SolveOutcome& o) {
  double worst = 0.0;
  for (int i = 0; i < p.num_rows(); ++i) {
    const double slack = o.row_activity[i] - p.rows[i].rhs;
    if (p.rows[i].sense == RowSense::kEqual) continue;
    worst = std::max(worst, std::abs(o.row_duals[i] * slack));
  }
  for (int j = 0; j < p.num_columns(); ++j) {
    const auto& c = p.columns[j];
    double dist = kInf;
    if (std::isfinite(c.lower)) dist = std::min(dist, std::abs(o.x[j] - c.lower));
    if (std::isfinite(c.upper)) dist = std::min(dist, std::abs(o.x[j] - c.upper));
    worst = std::max(worst, std::abs(o.reduced_costs[j]) * (std::isfinite(dist) ? dist : 1.0));
  }
  return worst;
}

}  // namespace stratbid::solver
