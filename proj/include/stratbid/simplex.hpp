#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "stratbid/lp_problem.hpp"

namespace stratbid::solver {

enum class SolveStatus {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kGapLimit,
  kTimeLimit,
  kIterationLimit,
};

std::string_view to_string(SolveStatus status);

struct SolveOutcome {
  SolveStatus status = SolveStatus::kInfeasible;
  std::vector<double> x;
  std::vector<double> row_duals;      // d objective / d rhs, original sense
  std::vector<double> reduced_costs;  // original sense
  std::vector<double> row_activity;
  double objective = 0.0;
  double best_bound = 0.0;  // MILP only; equals objective for LP
  double mip_gap = 0.0;
  long nodes = 0;
  long iterations = 0;
  double wall_seconds = 0.0;
};

struct LpSettings {
  double primal_tolerance = 1e-9;
  double dual_tolerance = 1e-9;
  double pivot_tolerance = 1e-9;
  long iteration_limit = 1'000'000;
  double time_limit_seconds = 1e30;
  int refactor_interval = 100;
  int stall_limit = 50;  // degenerate pivots before Bland's rule engages
  bool scale = true;
};

enum class VarStatus : std::uint8_t { kBasic, kAtLower, kAtUpper, kAtZero };

// Compact basis record: one status per structural column followed by one
// per row logical.
using Basis = std::vector<VarStatus>;

// Bounded revised simplex on the computational form  A x - r = 0  with
// simple bounds on structurals x and row logicals r. Holds a sparse LU of
// the basis with a product-form update file. Used standalone for LPs and
// warm-started by branch and bound with modified column bounds.
class SimplexEngine {
 public:
  SimplexEngine(const LpProblem& problem, LpSettings settings = {});
  ~SimplexEngine();
  SimplexEngine(const SimplexEngine&) = delete;
  SimplexEngine& operator=(const SimplexEngine&) = delete;

  // Bounds in original units.
  void set_column_bounds(int col, double lower, double upper);
  double column_lower(int col) const;
  double column_upper(int col) const;

  void set_deadline(std::chrono::steady_clock::time_point deadline);

  SolveStatus solve();

  Basis basis() const;
  void set_basis(const Basis& basis);

  // Results of the last solve in original units and sense.
  std::vector<double> primal() const;
  std::vector<double> row_duals() const;
  std::vector<double> reduced_costs() const;
  double objective() const;
  long iterations() const { return iterations_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  long iterations_ = 0;
};

SolveOutcome solve_lp(const LpProblem& problem, const LpSettings& settings = {});

// Relative gap between the primal objective and the dual objective built
// from row duals and reduced costs at the active bounds.
double duality_gap(const LpProblem& problem, const SolveOutcome& outcome);

// Largest |dual * slack| over rows and |reduced cost * distance to bound|
// over columns.
double complementarity_residual(const LpProblem& problem, const SolveOutcome& outcome);

}  // namespace stratbid::solver
