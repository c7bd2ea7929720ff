#include <cmath>
#include <random>

#include "doctest.h"
#include "stratbid/simplex.hpp"

using namespace stratbid::solver;

namespace {

// Certifies optimality independently of the solver path: primal
// feasibility, dual sign conditions, strong duality and complementarity.
void check_certificate(const LpProblem& p, const SolveOutcome& o) {
  REQUIRE(o.status == SolveStatus::kOptimal);
  CHECK(p.max_violation(o.x) <= 1e-7);
  const double sign = p.sense == ObjectiveSense::kMinimize ? 1.0 : -1.0;
  for (int i = 0; i < p.num_rows(); ++i) {
    const double y = sign * o.row_duals[i];
    if (p.rows[i].sense == RowSense::kGreaterEqual) CHECK(y >= -1e-7);
    if (p.rows[i].sense == RowSense::kLessEqual) CHECK(y <= 1e-7);
  }
  for (int j = 0; j < p.num_columns(); ++j) {
    const auto& c = p.columns[j];
    const double dj = sign * o.reduced_costs[j];
    const bool at_lower = std::isfinite(c.lower) && std::abs(o.x[j] - c.lower) <= 1e-9;
    const bool at_upper = std::isfinite(c.upper) && std::abs(o.x[j] - c.upper) <= 1e-9;
    if (!at_lower && !at_upper) CHECK(std::abs(dj) <= 1e-7);
    if (at_lower && !at_upper) CHECK(dj >= -1e-7);
    if (at_upper && !at_lower) CHECK(dj <= 1e-7);
  }
  CHECK(duality_gap(p, o) <= 1e-6);
  CHECK(complementarity_residual(p, o) <= 1e-7);
}

}  // namespace

TEST_CASE("single bound row: min x s.t. x >= 3") {
  LpProblem p;
  const int x = p.add_column("x", 1.0, 0.0, kInf);
  p.add_row("lo", RowSense::kGreaterEqual, 3.0, {{x, 1.0}});
  const auto o = solve_lp(p);
  REQUIRE(o.status == SolveStatus::kOptimal);
  CHECK(o.x[0] == doctest::Approx(3.0));
  CHECK(o.row_duals[0] == doctest::Approx(1.0));
  check_certificate(p, o);
}

TEST_CASE("maximization reports duals in the original sense") {
  LpProblem p;
  p.sense = ObjectiveSense::kMaximize;
  const int x = p.add_column("x", 3.0, 0.0, kInf);
  const int y = p.add_column("y", 2.0, 0.0, kInf);
  p.add_row("c1", RowSense::kLessEqual, 4.0, {{x, 1.0}, {y, 1.0}});
  p.add_row("c2", RowSense::kLessEqual, 6.0, {{x, 2.0}, {y, 1.0}});
  const auto o = solve_lp(p);
  REQUIRE(o.status == SolveStatus::kOptimal);
  CHECK(o.objective == doctest::Approx(10.0));
  CHECK(o.x[0] == doctest::Approx(2.0));
  CHECK(o.x[1] == doctest::Approx(2.0));
  CHECK(o.row_duals[0] == doctest::Approx(1.0));
  CHECK(o.row_duals[1] == doctest::Approx(1.0));
  check_certificate(p, o);
}

TEST_CASE("infeasible and unbounded statuses") {
  LpProblem inf;
  const int a = inf.add_column("a", 1.0, 0.0, 5.0);
  inf.add_row("r", RowSense::kGreaterEqual, 6.0, {{a, 1.0}});
  CHECK(solve_lp(inf).status == SolveStatus::kInfeasible);

  LpProblem unb;
  const int b = unb.add_column("b", -1.0, 0.0, kInf);
  const int c = unb.add_column("c", 0.0, 0.0, kInf);
  unb.add_row("r", RowSense::kGreaterEqual, 1.0, {{b, 1.0}, {c, 1.0}});
  CHECK(solve_lp(unb).status == SolveStatus::kUnbounded);
}

TEST_CASE("equality rows and free variables") {
  LpProblem p;
  const int x = p.add_column("x", 1.0, -kInf, kInf);
  const int y = p.add_column("y", 2.0, 0.0, kInf);
  p.add_row("bal", RowSense::kEqual, 5.0, {{x, 1.0}, {y, 1.0}});
  p.add_row("xcap", RowSense::kLessEqual, 2.0, {{x, 1.0}});
  const auto o = solve_lp(p);
  REQUIRE(o.status == SolveStatus::kOptimal);
  CHECK(o.x[0] == doctest::Approx(2.0));
  CHECK(o.x[1] == doctest::Approx(3.0));
  CHECK(o.row_duals[0] == doctest::Approx(2.0));
  CHECK(o.row_duals[1] == doctest::Approx(-1.0));
  check_certificate(p, o);
}

TEST_CASE("degenerate equal-cost LP has a unique optimal objective") {
  // Two identical suppliers share a load; any split is optimal.
  LpProblem p;
  const int g1 = p.add_column("g1", 10.0, 0.0, 100.0);
  const int g2 = p.add_column("g2", 10.0, 0.0, 100.0);
  p.add_row("bal", RowSense::kEqual, 150.0, {{g1, 1.0}, {g2, 1.0}});
  p.add_row("cap1", RowSense::kLessEqual, 100.0, {{g1, 1.0}});
  p.add_row("cap2", RowSense::kLessEqual, 100.0, {{g2, 1.0}});
  const auto o1 = solve_lp(p);
  std::swap(p.columns[0], p.columns[1]);
  const auto o2 = solve_lp(p);
  CHECK(o1.objective == doctest::Approx(1500.0));
  CHECK(o2.objective == doctest::Approx(1500.0));
  check_certificate(p, o2);
}

TEST_CASE("randomized LPs carry optimality certificates") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int solved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    LpProblem p;
    const int n = 2 + static_cast<int>(u(rng) * 8);
    const int m = 1 + static_cast<int>(u(rng) * 8);
    std::vector<double> feasible(n);
    for (int j = 0; j < n; ++j) {
      feasible[j] = 5.0 * u(rng);
      const double lo = u(rng) < 0.2 ? -kInf : 0.0;
      const double hi = u(rng) < 0.5 ? 10.0 : kInf;
      p.add_column("x" + std::to_string(j), 10.0 * u(rng) - 2.0, lo, hi);
    }
    for (int i = 0; i < m; ++i) {
      std::vector<std::pair<int, double>> e;
      double act = 0.0;
      for (int j = 0; j < n; ++j)
        if (u(rng) < 0.6) {
          const double a = 4.0 * u(rng) - 2.0;
          e.push_back({j, a});
          act += a * feasible[j];
        }
      const double r = u(rng);
      const RowSense s = r < 0.4 ? RowSense::kLessEqual : r < 0.8 ? RowSense::kGreaterEqual : RowSense::kEqual;
      const double rhs = s == RowSense::kLessEqual ? act + u(rng) : s == RowSense::kGreaterEqual ? act - u(rng) : act;
      p.add_row("r" + std::to_string(i), s, rhs, e);
    }
    // Box everything so the LP is bounded.
    for (int j = 0; j < n; ++j) p.add_row("box" + std::to_string(j), RowSense::kLessEqual, 50.0, {{j, 1.0}});
    for (int j = 0; j < n; ++j) p.add_row("floor" + std::to_string(j), RowSense::kGreaterEqual, -50.0, {{j, 1.0}});
    const auto o = solve_lp(p);
    REQUIRE(o.status == SolveStatus::kOptimal);
    check_certificate(p, o);
    ++solved;
  }
  CHECK(solved == 200);
}

TEST_CASE("warm-started engine re-solves after bound changes") {
  LpProblem p;
  const int x = p.add_column("x", -1.0, 0.0, 1.0);
  const int y = p.add_column("y", -1.0, 0.0, 1.0);
  p.add_row("c", RowSense::kLessEqual, 1.5, {{x, 1.0}, {y, 1.0}});
  SimplexEngine eng(p);
  REQUIRE(eng.solve() == SolveStatus::kOptimal);
  CHECK(eng.objective() == doctest::Approx(-1.5));
  eng.set_column_bounds(x, 0.0, 0.0);
  REQUIRE(eng.solve() == SolveStatus::kOptimal);
  CHECK(eng.objective() == doctest::Approx(-1.0));
  eng.set_column_bounds(x, 1.0, 1.0);
  REQUIRE(eng.solve() == SolveStatus::kOptimal);
  CHECK(eng.objective() == doctest::Approx(-1.5));
  CHECK(eng.primal()[1] == doctest::Approx(0.5));
}
