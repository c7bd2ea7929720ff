#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "stratbid/scenario.hpp"

namespace stratbid {

inline constexpr int kAgcSamplesPerInterval = 225;
inline constexpr double kAgcSampleSeconds = 4.0;

// Normalized regulation signal for one interval. Positive values ask for
// more injection (the BESS discharges), negative values for absorption.
struct AgcTrace {
  std::vector<double> signal;
  double sample_seconds = kAgcSampleSeconds;

  double mean() const;
  double max_abs() const;
  double travel() const;  // sum of |signal[k+1] - signal[k]|
};

// Removes the mean exactly and pulls the result back into [-1, 1],
// repeating until both hold. A constant input becomes all zeros.
std::vector<double> zero_mean_bounded(std::vector<double> raw);

// Seeded bounded random walk reflected at +-1, then zero_mean_bounded.
AgcTrace generate_signal(std::uint64_t seed, int samples = kAgcSamplesPerInterval);

// One value per line, optional text header; values must lie in [-1, 1].
AgcTrace read_signal_csv(const std::filesystem::path& path);

// Cleared BESS position in one interval, MW, and the SOC it starts from.
struct IntervalPosition {
  double delta_t = 0.25;  // h
  double soc_start = 0.0; // MWh
  double supply = 0.0;
  double demand = 0.0;
  double reserve = 0.0;
  double reg_capacity = 0.0;
  double reg_mileage = 0.0;
};

struct TrackingReport {
  std::vector<double> soc;  // after each sample, MWh
  double soc_end = 0.0;
  double arbitrage_delta = 0.0;   // (demand - supply) * delta_t, MWh
  double regulation_delta = 0.0;  // end-of-interval SOC change caused by regulation, MWh
  double min_soc = 0.0;
  double max_soc = 0.0;
  double max_excursion = 0.0;  // largest |SOC - arbitrage-only path|, MWh
  bool below_min = false;
  bool above_max = false;
  // Mileage the trace would demand (capacity x signal travel) next to the
  // cleared mileage award; not reconciled.
  double trace_mileage = 0.0;
  double awarded_mileage = 0.0;

  bool excursion_flag() const { return below_min || above_max; }
};

// The BESS follows the signal exactly on top of its energy position. Each
// sample holds for delta_t / samples, so traces of any length cover the
// whole interval.
TrackingReport simulate_tracking(const BessParams& bess, const IntervalPosition& position, const AgcTrace& trace,
                                 double tolerance = 1e-9);

}  // namespace stratbid
