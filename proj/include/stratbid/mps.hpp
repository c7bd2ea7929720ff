#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "stratbid/lp_problem.hpp"

namespace stratbid::solver {

class MpsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fixed-format MPS. Rows and columns get generated 8-character names
// (R0000001, C0000001); binaries sit inside INTORG/INTEND markers with BV
// bounds. Numbers are printed with at most 12 characters.
std::string to_mps(const MilpProblem& problem, const std::string& name = "STRATBID");
void export_mps(const MilpProblem& problem, const std::filesystem::path& path, const std::string& name = "STRATBID");

MilpProblem parse_mps(const std::string& text);
MilpProblem import_mps(const std::filesystem::path& path);

// Shortest decimal of at most 12 characters for v, as written to MPS.
std::string mps_number(double v);

}  // namespace stratbid::solver
