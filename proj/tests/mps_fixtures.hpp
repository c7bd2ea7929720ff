#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "stratbid/branch_and_bound.hpp"

namespace stratbid::testing {

using namespace stratbid::solver;

// Frozen instance behind tests/data/tiny.mps.
inline MilpProblem tiny() {
  MilpProblem p;
  auto& lp = p.lp;
  lp.sense = ObjectiveSense::kMaximize;
  lp.add_column("x", 3.0, 0.0, 4.0);
  lp.add_column("y", 2.0, -1.0, kInf);
  lp.add_column("b", -1.5, 0.0, 1.0);
  lp.add_column("f", 0.0, -kInf, kInf);
  lp.add_row("cap", RowSense::kLessEqual, 10.0, {{0, 1.0}, {1, 2.0}, {2, 5.0}});
  lp.add_row("link", RowSense::kGreaterEqual, -2.0, {{1, -1.0}, {2, 8.0}});
  lp.add_row("fix", RowSense::kEqual, 0.125, {{3, 1.0}, {0, -0.5}});
  p.is_integer = {0, 0, 1, 0};
  return p;
}

// Feasible by construction: every row holds at a random interior point.
inline MilpProblem random_milp(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> ncol(3, 10), nrow(2, 8), pick(0, 3);
  MilpProblem p;
  auto& lp = p.lp;
  lp.sense = seed % 2 ? ObjectiveSense::kMaximize : ObjectiveSense::kMinimize;
  const int n = ncol(rng), m = nrow(rng);
  std::vector<double> x0(n);
  for (int j = 0; j < n; ++j) {
    const bool bin = pick(rng) == 0;
    const double c = std::round(u(rng) * 1000.0) / 64.0;
    if (bin) {
      lp.add_column("c" + std::to_string(j), c, 0.0, 1.0);
      x0[j] = pick(rng) % 2;
    } else {
      const double lo = pick(rng) == 1 ? -5.0 : 0.0;
      lp.add_column("c" + std::to_string(j), c, lo, 10.0 + 3.0 * pick(rng));
      x0[j] = lo + 2.5 + u(rng);
    }
    p.is_integer.push_back(bin);
  }
  for (int r = 0; r < m; ++r) {
    std::vector<std::pair<int, double>> e;
    double act = 0.0;
    for (int j = 0; j < n; ++j)
      if (pick(rng) < 2) {
        const double a = u(rng) * 7.0;
        e.push_back({j, a});
        act += a * x0[j];
      }
    const int k = pick(rng) % 3;
    const RowSense s = k == 0 ? RowSense::kLessEqual : k == 1 ? RowSense::kGreaterEqual : RowSense::kEqual;
    const double rhs = s == RowSense::kLessEqual ? act + 1.0 : s == RowSense::kGreaterEqual ? act - 1.0 : act;
    lp.add_row("r" + std::to_string(r), s, rhs, e);
  }
  lp.objective_offset = std::round(u(rng) * 100.0);
  return p;
}

}  // namespace stratbid::testing
