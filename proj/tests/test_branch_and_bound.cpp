#include <cmath>
#include <random>

#include "doctest.h"
#include "stratbid/branch_and_bound.hpp"

using namespace stratbid::solver;

namespace {

struct Knapsack {
  std::vector<double> value, weight;
  double capacity = 0.0;
};

Knapsack random_knapsack(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(1.0, 10.0);
  Knapsack k;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    k.value.push_back(u(rng));
    k.weight.push_back(u(rng));
    total += k.weight.back();
  }
  k.capacity = 0.45 * total;
  return k;
}

double brute_force(const Knapsack& k) {
  const int n = static_cast<int>(k.value.size());
  double best = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    double w = 0.0, v = 0.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        w += k.weight[i];
        v += k.value[i];
      }
    if (w <= k.capacity) best = std::max(best, v);
  }
  return best;
}

MilpProblem as_milp(const Knapsack& k) {
  MilpProblem m;
  m.lp.sense = ObjectiveSense::kMaximize;
  std::vector<std::pair<int, double>> row;
  for (std::size_t i = 0; i < k.value.size(); ++i) {
    const int c = m.lp.add_column("x" + std::to_string(i), k.value[i], 0.0, 1.0);
    row.push_back({c, k.weight[i]});
  }
  m.lp.add_row("cap", RowSense::kLessEqual, k.capacity, row);
  m.is_integer.assign(k.value.size(), 1);
  return m;
}

}  // namespace

TEST_CASE("knapsack instances match exhaustive enumeration") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const auto k = random_knapsack(rng, 6 + trial % 8);
    const auto out = solve_milp(as_milp(k));
    REQUIRE(out.status == SolveStatus::kOptimal);
    CHECK(out.objective == doctest::Approx(brute_force(k)).epsilon(1e-9));
    CHECK(out.best_bound >= out.objective - 1e-7);
  }
}

TEST_CASE("LP-integral instance is solved at the root") {
  MilpProblem m;
  const int a = m.lp.add_column("a", 1.0, 0.0, 1.0);
  const int b = m.lp.add_column("b", 2.0, 0.0, 1.0);
  m.lp.add_row("cover", RowSense::kGreaterEqual, 1.0, {{a, 1.0}, {b, 1.0}});
  m.is_integer = {1, 1};
  const auto out = solve_milp(m);
  REQUIRE(out.status == SolveStatus::kOptimal);
  CHECK(out.nodes == 1);
  CHECK(out.objective == doctest::Approx(1.0));
}

TEST_CASE("infeasible MILP with feasible relaxation") {
  MilpProblem m;
  const int a = m.lp.add_column("a", 1.0, 0.0, 1.0);
  const int b = m.lp.add_column("b", 1.0, 0.0, 1.0);
  m.lp.add_row("half", RowSense::kEqual, 1.0, {{a, 2.0}, {b, 2.0}});
  m.lp.add_row("diff", RowSense::kEqual, 0.0, {{a, 1.0}, {b, -1.0}});
  m.is_integer = {1, 1};
  CHECK(solve_milp(m).status == SolveStatus::kInfeasible);
}

TEST_CASE("repeated solves are deterministic and the start is honoured") {
  std::mt19937_64 rng(3);
  const auto k = random_knapsack(rng, 14);
  const auto milp = as_milp(k);
  MilpSettings s;
  s.seed = 42;
  const auto a = solve_milp(milp, s);
  const auto b = solve_milp(milp, s);
  CHECK(a.objective == b.objective);
  CHECK(a.nodes == b.nodes);
  CHECK(a.x == b.x);

  MilpSettings start = s;
  start.initial_solution = a.x;
  start.node_limit = 0;
  const auto c = solve_milp(milp, start);
  CHECK(c.objective == doctest::Approx(a.objective));
  CHECK(c.status == SolveStatus::kIterationLimit);
}

TEST_CASE("mixed continuous and binary columns with a heuristic callback") {
  // Fixed-charge supply: pay 5 to open, 1 per unit, need 3 units, cap 4 if open.
  MilpProblem m;
  const int open = m.lp.add_column("open", 5.0, 0.0, 1.0);
  const int q = m.lp.add_column("q", 1.0, 0.0, kInf);
  const int alt = m.lp.add_column("alt", 4.0, 0.0, kInf);
  m.lp.add_row("link", RowSense::kLessEqual, 0.0, {{q, 1.0}, {open, -4.0}});
  m.lp.add_row("need", RowSense::kGreaterEqual, 3.0, {{q, 1.0}, {alt, 1.0}});
  m.is_integer = {1, 0, 0};
  MilpSettings s;
  int calls = 0;
  s.heuristic = [&](const std::vector<double>&) -> std::optional<std::vector<double>> {
    ++calls;
    return std::vector<double>{0.0, 0.0, 3.0};
  };
  const auto out = solve_milp(m, s);
  REQUIRE(out.status == SolveStatus::kOptimal);
  CHECK(out.objective == doctest::Approx(8.0));
  CHECK(calls >= 1);
}
