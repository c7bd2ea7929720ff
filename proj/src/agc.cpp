#include "stratbid/agc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace stratbid {

namespace {

double exact_mean(const std::vector<double>& v) {
  long double s = 0.0L;
  for (double x : v) s += x;
  return static_cast<double>(s / static_cast<long double>(v.size()));
}

}  // namespace

double AgcTrace::mean() const { return signal.empty() ? 0.0 : exact_mean(signal); }

double AgcTrace::max_abs() const {
  double m = 0.0;
  for (double x : signal) m = std::max(m, std::abs(x));
  return m;
}

double AgcTrace::travel() const {
  double s = 0.0;
  for (std::size_t k = 1; k < signal.size(); ++k) s += std::abs(signal[k] - signal[k - 1]);
  return s;
}

std::vector<double> zero_mean_bounded(std::vector<double> v) {
  if (v.empty()) return v;
  for (int it = 0; it < 200; ++it) {
    const double m = exact_mean(v);
    for (double& x : v) x -= m;
    double peak = 0.0;
    for (double x : v) peak = std::max(peak, std::abs(x));
    if (peak <= 1.0 && std::abs(exact_mean(v)) <= 1e-12) return v;
    for (double& x : v) x = std::clamp(x, -1.0, 1.0);
  }
  // fallback: rescaling keeps the mean at zero
  const double m = exact_mean(v);
  for (double& x : v) x -= m;
  double peak = 0.0;
  for (double x : v) peak = std::max(peak, std::abs(x));
  if (peak > 1.0)
    for (double& x : v) x /= peak;
  return v;
}

AgcTrace generate_signal(std::uint64_t seed, int samples) {
  if (samples < 2) throw std::invalid_argument("an AGC trace needs at least 2 samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> start(-0.5, 0.5);
  std::normal_distribution<double> step(0.0, 0.15);
  std::vector<double> raw(samples);
  double x = start(rng);
  for (int k = 0; k < samples; ++k) {
    raw[k] = x;
    x += step(rng);
    if (x > 1.0) x = 2.0 - x;
    if (x < -1.0) x = -2.0 - x;
    x = std::clamp(x, -1.0, 1.0);
  }
  AgcTrace t;
  t.signal = zero_mean_bounded(std::move(raw));
  return t;
}

AgcTrace read_signal_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  AgcTrace t;
  std::string line;
  int n = 0;
  while (std::getline(f, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto comma = line.find_last_of(',');
    const std::string field = comma == std::string::npos ? line : line.substr(comma + 1);
    if (field.find_first_not_of(" \t") == std::string::npos) continue;
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str()) {
      if (n == 1) continue;  // header
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": not a number");
    }
    if (!(std::abs(v) <= 1.0))
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": signal outside [-1, 1]");
    t.signal.push_back(v);
  }
  if (t.signal.size() < 2) throw std::runtime_error(path.string() + ": fewer than 2 samples");
  return t;
}

TrackingReport simulate_tracking(const BessParams& bess, const IntervalPosition& p, const AgcTrace& trace,
                                 double tolerance) {
  if (trace.signal.empty()) throw std::invalid_argument("empty AGC trace");
  TrackingReport r;
  const int n = static_cast<int>(trace.signal.size());
  const double h = p.delta_t / n;
  const double net = p.supply - p.demand;  // MW injected by the energy position
  r.arbitrage_delta = -net * p.delta_t;
  r.min_soc = r.max_soc = p.soc_start;
  r.soc.reserve(n);
  long double reg = 0.0L;  // cumulative regulation energy injected, MWh
  for (int k = 0; k < n; ++k) {
    reg += static_cast<long double>(trace.signal[k]) * p.reg_capacity * h;
    const double base = p.soc_start - net * h * (k + 1);
    const double soc = base - static_cast<double>(reg);
    r.soc.push_back(soc);
    r.min_soc = std::min(r.min_soc, soc);
    r.max_soc = std::max(r.max_soc, soc);
    r.max_excursion = std::max(r.max_excursion, std::abs(static_cast<double>(reg)));
  }
  r.regulation_delta = -static_cast<double>(reg);
  r.soc_end = p.soc_start + r.arbitrage_delta + r.regulation_delta;
  r.below_min = r.min_soc < bess.soc_min - tolerance;
  r.above_max = r.max_soc > bess.soc_max + tolerance;
  r.trace_mileage = p.reg_capacity * trace.travel();
  r.awarded_mileage = p.reg_mileage;
  return r;
}

}  // namespace stratbid
