#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "stratbid/lp_problem.hpp"
#include "stratbid/scenario.hpp"

namespace stratbid {

class ClearingError : public std::runtime_error {
 public:
  ClearingError(int interval, const std::string& what)
      : std::runtime_error("interval " + std::to_string(interval) + ": " + what), interval_(interval) {}
  int interval() const { return interval_; }

 private:
  int interval_;
};

// BESS quantity bids for one interval, MW.
struct BessQuantityBids {
  double supply = 0.0;
  double demand = 0.0;
  double reserve = 0.0;
  double regulation = 0.0;
};

enum class GenVar { kEnergy = 0, kReserve = 1, kRegCapacity = 2, kRegMileage = 3 };
enum class BessVar { kSupply = 0, kDemand = 1, kReserve = 2, kRegCapacity = 3, kRegMileage = 4 };
// Quantity-bid products; regulation covers both capacity and mileage.
enum class BessProduct { kSupply = 0, kDemand = 1, kReserve = 2, kRegulation = 3 };

struct LlRowInfo {
  std::string tag;     // L2 .. L17
  int generator = -1;  // owning generator, -1 for BESS and system rows
  int bid = -1;        // BessProduct whose quantity bid b enters as rhs = -b, or -1
};

// Single-interval clearing LP. Every row is >= except the L17 balance
// equality; all variables are nonnegative with no column upper bounds, so
// the row duals are the full KKT multiplier set. The objective is in $/h
// and the duals are prices in $/MWh.
struct LlInstance {
  int interval = 0;  // position in the scenario, 0-based
  double delta_t = 0.25;
  int num_generators = 0;
  solver::LpProblem lp;
  std::vector<LlRowInfo> row_info;
  std::array<int, 5> bess_col{-1, -1, -1, -1, -1};
  std::array<bool, 4> product_present{false, false, false, false};
  int row_reserve = -1;     // L14
  int row_regcap = -1;      // L15
  int row_mileage = -1;     // L16
  int row_balance = -1;     // L17
  double bess_mileage_multiplier = 10.0;
  BessQuantityBids bids;

  int gen_col(int j, GenVar v) const { return 4 * j + static_cast<int>(v); }
  int num_columns() const { return lp.num_columns(); }
  int num_rows() const { return lp.num_rows(); }
};

struct GeneratorAward {
  double energy = 0.0;
  double reserve = 0.0;
  double reg_capacity = 0.0;
  double reg_mileage = 0.0;
};

struct BessAward {
  double supply = 0.0;
  double demand = 0.0;
  double reserve = 0.0;
  double reg_capacity = 0.0;
  double reg_mileage = 0.0;
};

struct MarketPrices {
  double energy = 0.0;        // L17
  double reserve = 0.0;       // L14
  double reg_capacity = 0.0;  // L15
  double reg_mileage = 0.0;   // L16
};

struct ClearingResult {
  int interval = 0;
  double delta_t = 0.25;
  std::vector<GeneratorAward> generators;
  BessAward bess;
  MarketPrices prices;
  double objective = 0.0;  // $ over the interval
  std::vector<double> x;          // full LlInstance column order
  std::vector<double> row_duals;  // full LlInstance row order
  double duality_gap = 0.0;
  double complementarity = 0.0;
};

// Market products the BESS is allowed to bid into, derived from a mask.
std::array<bool, 4> bess_products(const MarketMask& mask);

LlInstance build_ll_interval(const Scenario& scenario, int t, const BessQuantityBids& bids);
LlInstance build_ll_interval(const Scenario& scenario, int t, const BessQuantityBids& bids,
                             const std::array<bool, 4>& products);

// Products with a zero quantity bid are removed before solving; their rows'
// multipliers are then recovered from the solved prices so the returned
// duals still satisfy the full KKT system.
ClearingResult clear_interval(const LlInstance& instance);

std::vector<ClearingResult> clear_horizon(const Scenario& scenario, const std::vector<BessQuantityBids>& bids);

// Dual feasibility, complementarity and stationarity residuals of (x, y)
// on the full instance; max absolute violation.
struct KktResiduals {
  double primal = 0.0;
  double dual = 0.0;            // reduced-cost sign violations and dual sign violations
  double complementarity = 0.0;
  double duality_gap = 0.0;     // relative
};
KktResiduals ll_kkt_residuals(const LlInstance& instance, const std::vector<double>& x,
                              const std::vector<double>& y);

void write_clearing_csv(const std::vector<ClearingResult>& results, const std::filesystem::path& path);

}  // namespace stratbid
