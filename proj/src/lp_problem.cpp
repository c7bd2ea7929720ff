#include "stratbid/lp_problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stratbid::solver {

void LpProblem::validate() const {
  for (const auto& c : columns) {
    if (std::isnan(c.cost) || std::isnan(c.lower) || std::isnan(c.upper))
      throw std::invalid_argument("column " + c.name + " has NaN data");
    if (!std::isfinite(c.cost)) throw std::invalid_argument("column " + c.name + " has infinite cost");
    if (c.lower > c.upper) throw std::invalid_argument("column " + c.name + " has crossed bounds");
  }
  for (const auto& r : rows)
    if (!std::isfinite(r.rhs)) throw std::invalid_argument("row " + r.name + " has non-finite rhs");
  for (const auto& e : coefficients) {
    if (e.row < 0 || e.row >= num_rows() || e.col < 0 || e.col >= num_columns())
      throw std::invalid_argument("coefficient index out of range");
    if (!std::isfinite(e.value)) throw std::invalid_argument("non-finite coefficient");
  }
}

std::vector<double> LpProblem::row_activity(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != num_columns()) throw std::invalid_argument("primal size mismatch");
  std::vector<double> act(rows.size(), 0.0);
  for (const auto& e : coefficients) act[e.row] += e.value * x[e.col];
  return act;
}

double LpProblem::evaluate_objective(const std::vector<double>& x) const {
  double obj = objective_offset;
  for (int j = 0; j < num_columns(); ++j) obj += columns[j].cost * x[j];
  return obj;
}

namespace {

double row_violation(const Row& r, double activity) {
  switch (r.sense) {
    case RowSense::kLessEqual: return std::max(0.0, activity - r.rhs);
    case RowSense::kGreaterEqual: return std::max(0.0, r.rhs - activity);
    case RowSense::kEqual: return std::abs(activity - r.rhs);
  }
  return 0.0;
}

}  // namespace

double LpProblem::max_violation(const std::vector<double>& x) const {
  const auto act = row_activity(x);
  double worst = 0.0;
  for (int i = 0; i < num_rows(); ++i) worst = std::max(worst, row_violation(rows[i], act[i]));
  for (int j = 0; j < num_columns(); ++j) {
    worst = std::max(worst, columns[j].lower - x[j]);
    worst = std::max(worst, x[j] - columns[j].upper);
  }
  return worst;
}

std::string LpProblem::worst_row(const std::vector<double>& x, double tol) const {
  const auto act = row_activity(x);
  double worst = tol;
  std::string name;
  for (int i = 0; i < num_rows(); ++i) {
    const double v = row_violation(rows[i], act[i]);
    if (v > worst) {
      worst = v;
      name = rows[i].name;
    }
  }
  return name;
}

void MilpProblem::validate() const {
  lp.validate();
  if (static_cast<int>(is_integer.size()) != lp.num_columns())
    throw std::invalid_argument("integrality markers do not match column count");
  if (!priority.empty() && static_cast<int>(priority.size()) != lp.num_columns())
    throw std::invalid_argument("priority vector does not match column count");
  for (int j = 0; j < lp.num_columns(); ++j)
    if (is_integer[j] && (lp.columns[j].lower < 0.0 || lp.columns[j].upper > 1.0))
      throw std::invalid_argument("integer column " + lp.columns[j].name + " is not binary");
}

int MilpProblem::num_integers() const {
  return static_cast<int>(std::count(is_integer.begin(), is_integer.end(), char{1}));
}

}  // namespace stratbid::solver
