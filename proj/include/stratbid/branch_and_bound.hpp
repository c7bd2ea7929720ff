#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "stratbid/lp_problem.hpp"
#include "stratbid/simplex.hpp"

namespace stratbid::solver {

struct MilpProgress {
  long nodes = 0;
  long open_nodes = 0;
  double incumbent = 0.0;  // original sense; NaN when none
  double bound = 0.0;      // original sense
  double gap = 0.0;
  double seconds = 0.0;
};

// Produces a candidate full solution from a node relaxation. Candidates are
// checked for feasibility and integrality before they can become incumbents.
using MilpHeuristic = std::function<std::optional<std::vector<double>>(const std::vector<double>& relaxation)>;

struct MilpSettings {
  double gap_tolerance = 1e-6;      // relative
  double absolute_gap = 1e-7;
  double time_limit_seconds = 600.0;
  long node_limit = -1;             // negative: unlimited
  std::uint64_t seed = 0;           // tie-break among equal-bound nodes
  double integrality_tolerance = 1e-6;
  double feasibility_tolerance = 1e-6;
  int rounding_frequency = 50;      // nodes between rounding heuristics; 0 disables
  int heuristic_frequency = 10;     // nodes between user heuristic calls; 0 disables
  LpSettings lp;
  MilpHeuristic heuristic;
  std::vector<double> initial_solution;  // optional start, checked like heuristic output
  std::function<void(const MilpProgress&)> on_progress;
  double progress_interval_seconds = 5.0;
};

// Best-first branch and bound with plunging over binary columns. Node LPs
// are warm-started from the parent basis with the dual simplex.
SolveOutcome solve_milp(const MilpProblem& problem, const MilpSettings& settings = {});

// True when x satisfies rows, bounds and integrality within tolerance.
bool is_milp_feasible(const MilpProblem& problem, const std::vector<double>& x, double feas_tol = 1e-6,
                      double int_tol = 1e-6);

}  // namespace stratbid::solver
