#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace stratbid::solver {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ObjectiveSense { kMinimize, kMaximize };
enum class RowSense { kLessEqual, kGreaterEqual, kEqual };

struct Column {
  std::string name;
  double cost = 0.0;
  double lower = 0.0;
  double upper = kInf;
};

struct Row {
  std::string name;
  RowSense sense = RowSense::kGreaterEqual;
  double rhs = 0.0;
};

struct Coefficient {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

// Sparse linear program in row form. Coefficients are kept as triplets;
// duplicates are summed when the solver assembles its column-major copy.
struct LpProblem {
  ObjectiveSense sense = ObjectiveSense::kMinimize;
  double objective_offset = 0.0;
  std::vector<Column> columns;
  std::vector<Row> rows;
  std::vector<Coefficient> coefficients;

  int num_columns() const { return static_cast<int>(columns.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  int add_column(std::string name, double cost, double lower, double upper) {
    columns.push_back({std::move(name), cost, lower, upper});
    return num_columns() - 1;
  }

  int add_row(std::string name, RowSense row_sense, double rhs,
              const std::vector<std::pair<int, double>>& entries = {}) {
    rows.push_back({std::move(name), row_sense, rhs});
    const int r = num_rows() - 1;
    for (const auto& [col, value] : entries) coefficients.push_back({r, col, value});
    return r;
  }

  void add_coefficient(int row, int col, double value) {
    coefficients.push_back({row, col, value});
  }

  // Throws std::invalid_argument on out-of-range indices, NaN data or
  // crossed bounds.
  void validate() const;

  // Row activities A x.
  std::vector<double> row_activity(const std::vector<double>& x) const;

  double evaluate_objective(const std::vector<double>& x) const;

  // Largest violation of row senses and column bounds at x.
  double max_violation(const std::vector<double>& x) const;

  // Name of the row with the largest violation at x, empty when all rows
  // are satisfied within tol.
  std::string worst_row(const std::vector<double>& x, double tol) const;
};

struct MilpProblem {
  LpProblem lp;
  std::vector<char> is_integer;  // one flag per column; integers are binaries
  std::vector<int> priority;     // branching class, higher first; may be empty

  void validate() const;
  int num_integers() const;
};

}  // namespace stratbid::solver
