#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace stratbid {

inline constexpr const char* kScenarioSchema = "stratbid.scenario/1";

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GeneratorParams {
  std::string id;
  double base_price_bid = 0.0;      // $/MWh
  double p_max = 0.0;               // MW
  double p_min = 0.0;               // MW
  double reserve_ramp = 0.0;        // MW
  double regulation_ramp = 0.0;     // MW
  double mileage_multiplier = 10.0;
};

struct BessParams {
  double energy_capacity = 0.0;  // MWh
  double power_rate = 0.0;       // MW
  double soc_init = 0.0;         // MWh
  double soc_min = 0.0;          // MWh
  double soc_max = 0.0;          // MWh
  double mileage_multiplier = 10.0;
};

// Generator price bids for one interval, $/MWh.
struct GeneratorBids {
  double energy = 0.0;
  double reserve = 0.0;
  double reg_capacity = 0.0;
  double reg_mileage = 0.0;
};

// BESS price bids for one interval, $/MWh. The demand price is the
// willingness to pay for charging energy.
struct BessPriceBids {
  double supply = 0.0;
  double demand = 0.0;
  double reserve = 0.0;
  double reg_capacity = 0.0;
  double reg_mileage = 0.0;
};

struct IntervalData {
  int index = 0;
  double delta_t = 0.25;     // h
  double load = 0.0;         // MW
  double reserve_req = 0.0;  // MW
  double regcap_req = 0.0;   // MW
  double mileage_req = 0.0;  // MW
  std::vector<GeneratorBids> generator_bids;
  BessPriceBids bess_bids;
};

struct MarketMask {
  bool energy = true;
  bool reserve = true;
  bool regulation = true;

  static MarketMask for_case(int case_id);
  bool operator==(const MarketMask&) const = default;
  // Every market enabled here is also enabled in other.
  bool subset_of(const MarketMask& other) const;
  std::string label() const;
};

struct Scenario {
  std::vector<GeneratorParams> generators;
  BessParams bess;
  std::vector<IntervalData> intervals;
  MarketMask market_mask;

  int num_intervals() const { return static_cast<int>(intervals.size()); }
  int num_generators() const { return static_cast<int>(generators.size()); }
};

struct Patterns {
  std::vector<double> price;
  std::vector<double> load;
};

struct PriceRatios {
  double reserve = 0.15;
  double reg_capacity = 0.4;
  double reg_mileage = 0.07;
};

struct RequirementFractions {
  double reserve = 0.10;
  double reg_capacity = 0.04;
  double mileage_multiple = 1.75;  // mileage requirement / capacity requirement
};

struct SynthesisOptions {
  double delta_t = 0.25;
  MarketMask market_mask;
  // BESS demand price as a multiple of the interval's largest summed
  // generator bid (energy + reserve + regulation capacity + mileage).
  double demand_price_multiple = 2.0;
};

struct Violation {
  std::string field;
  std::string message;
};

// Reads a one-column pattern CSV (optional "interval,value" header).
std::vector<double> read_pattern_csv(const std::filesystem::path& path);

Patterns load_patterns(const std::filesystem::path& price_pattern_file,
                       const std::filesystem::path& load_pattern_file);

// Keeps every stride-th value starting at offset.
Patterns subsample(const Patterns& patterns, int stride, int offset = 0);

Scenario synthesize_scenario(const Patterns& patterns, const std::vector<GeneratorParams>& generators,
                             const BessParams& bess, double peak_load_mw, const PriceRatios& ratios = {},
                             const RequirementFractions& fractions = {}, const SynthesisOptions& options = {});

std::vector<Violation> validate_scenario(const Scenario& scenario);

// Five-unit generator table of the reference test system.
std::vector<GeneratorParams> reference_generators();

// 400 MWh / 40 MW reference BESS.
BessParams reference_bess();

// Reduced CI scenario: 24 subsampled intervals, reference units 1, 2 and 4
// with capacities and ramps scaled by desk_capacity_scale, 100 MWh / 10 MW
// BESS, 250 MW peak.
inline constexpr double kDeskCapacityScale = 0.35;
Scenario desk_scenario(const Patterns& full_day_patterns, const MarketMask& mask = {});

// Full 96-interval reference scenario at 1000 MW peak.
Scenario reference_scenario(const Patterns& patterns, const MarketMask& mask = {});

std::string scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const std::string& text);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace stratbid
