#include "stratbid/branch_and_bound.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <queue>

namespace stratbid::solver {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Fix {
  int col;
  double value;
  std::shared_ptr<const Fix> parent;
};

struct Node {
  long id = 0;
  int depth = 0;
  double bound = -kInf;  // minimization sense
  std::uint64_t tiebreak = 0;
  std::shared_ptr<const Fix> fixes;
  std::shared_ptr<const Basis> basis;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.tiebreak > b.tiebreak;
  }
};

class BranchAndBound {
 public:
  BranchAndBound(const MilpProblem& p, const MilpSettings& s)
      : problem_(p), cfg_(s), engine_(p.lp, s.lp), start_(Clock::now()) {
    sign_ = p.lp.sense == ObjectiveSense::kMinimize ? 1.0 : -1.0;
    deadline_ = start_ + std::chrono::duration_cast<Clock::duration>(
                             std::chrono::duration<double>(std::min(s.time_limit_seconds, 1e7)));
    engine_.set_deadline(deadline_);
    for (int j = 0; j < p.lp.num_columns(); ++j)
      if (p.is_integer[j]) ints_.push_back(j);
  }

  SolveOutcome run() {
    SolveOutcome out;
    if (!cfg_.initial_solution.empty()) offer(cfg_.initial_solution);

    Node root;
    root.id = next_id_++;
    root.tiebreak = splitmix64(cfg_.seed ^ static_cast<std::uint64_t>(root.id));
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    std::optional<Node> current = root;
    bool limit_hit = false;
    SolveStatus limit_status = SolveStatus::kTimeLimit;
    bool root_unbounded = false;

    while (current || !open.empty()) {
      if (Clock::now() > deadline_) {
        limit_hit = true;
        limit_status = SolveStatus::kTimeLimit;
        if (current) open.push(*current);
        break;
      }
      if (cfg_.node_limit >= 0 && nodes_ >= cfg_.node_limit) {
        limit_hit = true;
        limit_status = SolveStatus::kIterationLimit;
        if (current) open.push(*current);
        break;
      }
      if (!current) {
        current = open.top();
        open.pop();
      }
      Node node = std::move(*current);
      current.reset();
      if (has_incumbent() && node.bound >= incumbent_ - prune_tolerance()) {
        note_pruned(node.bound);
        continue;
      }

      // Gap test against the best open bound.
      if (has_incumbent()) {
        double global = node.bound;
        if (!open.empty()) global = std::min(global, open.top().bound);
        if (gap_closed(global)) {
          open.push(node);
          gap_stop_ = true;
          break;
        }
      }

      ++nodes_;
      apply_bounds(node);
      if (node.basis) engine_.set_basis(*node.basis);
      const SolveStatus st = engine_.solve();
      report_progress(open.size(), node.bound);
      if (st == SolveStatus::kInfeasible) continue;
      if (st == SolveStatus::kUnbounded) {
        if (node.depth == 0) root_unbounded = true;
        break;
      }
      if (st != SolveStatus::kOptimal) {
        // Time or iteration limit inside the node LP; keep it open.
        open.push(node);
        limit_hit = true;
        limit_status = st == SolveStatus::kTimeLimit ? SolveStatus::kTimeLimit : SolveStatus::kIterationLimit;
        if (st == SolveStatus::kTimeLimit) break;
        continue;
      }
      const double obj = sign_ * engine_.objective();
      if (node.depth == 0) root_bound_ = obj;
      if (has_incumbent() && obj >= incumbent_ - prune_tolerance()) {
        note_pruned(obj);
        continue;
      }

      const auto x = engine_.primal();
      const int branch = select_branch(x);
      if (branch < 0) {
        offer(x);
        continue;
      }

      auto basis = std::make_shared<const Basis>(engine_.basis());
      run_heuristics(x, node);

      const double frac = x[branch] - std::floor(x[branch]);
      const double first = frac >= 0.5 ? 1.0 : 0.0;
      Node a, b;
      for (auto [child, value] : {std::pair<Node*, double>{&a, first}, {&b, 1.0 - first}}) {
        child->id = next_id_++;
        child->depth = node.depth + 1;
        child->bound = obj;
        child->tiebreak = splitmix64(cfg_.seed ^ static_cast<std::uint64_t>(child->id));
        child->fixes = std::make_shared<const Fix>(Fix{branch, value, node.fixes});
        child->basis = basis;
      }
      open.push(std::move(b));
      current = std::move(a);
    }

    out.nodes = nodes_;
    out.iterations = engine_.iterations();
    out.wall_seconds = std::chrono::duration<double>(Clock::now() - start_).count();
    if (root_unbounded) {
      out.status = SolveStatus::kUnbounded;
      return out;
    }
    double bound = std::min(incumbent_, pruned_bound_);
    if (!open.empty()) bound = std::min(bound, open.top().bound);
    if (!has_incumbent()) {
      out.status = limit_hit ? limit_status : SolveStatus::kInfeasible;
      out.best_bound = sign_ * (open.empty() ? root_bound_ : open.top().bound);
      return out;
    }
    out.x = best_x_;
    out.row_activity = problem_.lp.row_activity(best_x_);
    out.objective = sign_ * incumbent_;
    out.best_bound = sign_ * bound;
    out.mip_gap = relative_gap(bound);
    if (open.empty()) out.status = out.mip_gap <= 1e-9 || cfg_.gap_tolerance <= 1e-9 ? SolveStatus::kOptimal : SolveStatus::kGapLimit;
    else if (gap_stop_) out.status = out.mip_gap <= 1e-9 ? SolveStatus::kOptimal : SolveStatus::kGapLimit;
    else out.status = limit_status;
    return out;
  }

 private:
  bool has_incumbent() const { return std::isfinite(incumbent_); }

  double relative_gap(double bound) const {
    const double diff = std::max(0.0, incumbent_ - bound);
    if (diff == 0.0) return 0.0;
    return diff / std::max(std::abs(incumbent_), 1e-10);
  }

  double prune_tolerance() const {
    return std::max(cfg_.absolute_gap, cfg_.gap_tolerance * std::abs(incumbent_));
  }

  void note_pruned(double bound) { pruned_bound_ = std::min(pruned_bound_, bound); }

  bool gap_closed(double bound) const { return incumbent_ - bound <= prune_tolerance(); }

  void apply_bounds(const Node& node) {
    for (int j : ints_) {
      const auto& c = problem_.lp.columns[j];
      engine_.set_column_bounds(j, c.lower, c.upper);
    }
    for (const Fix* f = node.fixes.get(); f; f = f->parent.get()) engine_.set_column_bounds(f->col, f->value, f->value);
  }

  int select_branch(const std::vector<double>& x) const {
    int best = -1;
    int best_priority = std::numeric_limits<int>::min();
    double best_score = 0.0;
    for (int j : ints_) {
      const double frac = x[j] - std::floor(x[j]);
      const double score = std::min(frac, 1.0 - frac);
      if (score <= cfg_.integrality_tolerance) continue;
      const int pr = problem_.priority.empty() ? 0 : problem_.priority[j];
      if (pr > best_priority || (pr == best_priority && score > best_score)) {
        best = j;
        best_priority = pr;
        best_score = score;
      }
    }
    return best;
  }

  void offer(std::vector<double> x) {
    if (static_cast<int>(x.size()) != problem_.lp.num_columns()) return;
    for (int j : ints_) x[j] = std::round(x[j]);
    if (!is_milp_feasible(problem_, x, cfg_.feasibility_tolerance, cfg_.integrality_tolerance)) return;
    const double obj = sign_ * problem_.lp.evaluate_objective(x);
    if (!has_incumbent() || obj < incumbent_ - 1e-12 * std::max(1.0, std::abs(obj))) {
      incumbent_ = obj;
      best_x_ = std::move(x);
    }
  }

  // Rounds every binary, fixes it and re-solves the remaining LP.
  void rounding(const std::vector<double>& x, const Node& node) {
    const auto saved = engine_.basis();
    for (int j : ints_) {
      const double v = std::round(x[j]);
      engine_.set_column_bounds(j, v, v);
    }
    if (engine_.solve() == SolveStatus::kOptimal) offer(engine_.primal());
    apply_bounds(node);
    engine_.set_basis(saved);
  }

  void run_heuristics(const std::vector<double>& x, const Node& node) {
    if (cfg_.heuristic && cfg_.heuristic_frequency > 0 &&
        (node.depth == 0 || nodes_ % cfg_.heuristic_frequency == 0)) {
      if (auto cand = cfg_.heuristic(x)) offer(std::move(*cand));
    }
    if (cfg_.rounding_frequency > 0 && (node.depth == 0 || nodes_ % cfg_.rounding_frequency == 0))
      rounding(x, node);
  }

  void report_progress(std::size_t open, double bound) {
    if (!cfg_.on_progress) return;
    const double now = std::chrono::duration<double>(Clock::now() - start_).count();
    if (now - last_report_ < cfg_.progress_interval_seconds) return;
    last_report_ = now;
    MilpProgress p;
    p.nodes = nodes_;
    p.open_nodes = static_cast<long>(open);
    p.incumbent = has_incumbent() ? sign_ * incumbent_ : std::numeric_limits<double>::quiet_NaN();
    p.bound = sign_ * bound;
    p.gap = has_incumbent() ? relative_gap(bound) : kInf;
    p.seconds = now;
    cfg_.on_progress(p);
  }

  const MilpProblem& problem_;
  const MilpSettings& cfg_;
  SimplexEngine engine_;
  Clock::time_point start_;
  Clock::time_point deadline_;
  double sign_ = 1.0;
  std::vector<int> ints_;
  double incumbent_ = kInf;
  std::vector<double> best_x_;
  double root_bound_ = -kInf;
  double pruned_bound_ = kInf;
  long nodes_ = 0;
  long next_id_ = 0;
  bool gap_stop_ = false;
  double last_report_ = 0.0;
};

}  // namespace

bool is_milp_feasible(const MilpProblem& problem, const std::vector<double>& x, double feas_tol,
                      double int_tol) {
  if (static_cast<int>(x.size()) != problem.lp.num_columns()) return false;
  for (int j = 0; j < problem.lp.num_columns(); ++j)
    if (problem.is_integer[j] && std::abs(x[j] - std::round(x[j])) > int_tol) return false;
  return problem.lp.max_violation(x) <= feas_tol;
}

SolveOutcome solve_milp(const MilpProblem& problem, const MilpSettings& settings) {
  problem.validate();
  BranchAndBound bb(problem, settings);
  return bb.run();
}

}  // namespace stratbid::solver
