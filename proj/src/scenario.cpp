#include "stratbid/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace stratbid {

using nlohmann::json;

MarketMask MarketMask::for_case(int case_id) {
  switch (case_id) {
    case 1: return {true, false, false};
    case 2: return {true, true, false};
    case 3: return {true, false, true};
    case 4: return {true, true, true};
    default: throw ScenarioError("case id must be 1-4, got " + std::to_string(case_id));
  }
}

bool MarketMask::subset_of(const MarketMask& o) const {
  return (!energy || o.energy) && (!reserve || o.reserve) && (!regulation || o.regulation);
}

std::string MarketMask::label() const {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += '+';
    s += name;
  };
  add(energy, "E");
  add(reserve, "Rs");
  add(regulation, "Rg");
  return s.empty() ? "none" : s;
}

std::vector<double> read_pattern_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot read pattern file " + path.string());
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto comma = line.rfind(',');
    const std::string field = comma == std::string::npos ? line : line.substr(comma + 1);
    try {
      std::size_t used = 0;
      const double v = std::stod(field, &used);
      values.push_back(v);
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // header
      throw ScenarioError(path.string() + ":" + std::to_string(line_no) + ": not a number");
    }
  }
  if (values.empty()) throw ScenarioError("pattern file " + path.string() + " is empty");
  return values;
}

Patterns load_patterns(const std::filesystem::path& price_file, const std::filesystem::path& load_file) {
  Patterns p{read_pattern_csv(price_file), read_pattern_csv(load_file)};
  if (p.price.size() != p.load.size())
    throw ScenarioError("price pattern has " + std::to_string(p.price.size()) + " values but load pattern has " +
                        std::to_string(p.load.size()));
  auto check = [](const std::vector<double>& v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!(v[i] >= 0.0 && v[i] <= 1.0))
        throw ScenarioError(std::string(what) + " pattern value at interval " + std::to_string(i + 1) +
                            " is outside [0, 1]");
  };
  check(p.price, "price");
  check(p.load, "load");
  const double peak = *std::max_element(p.load.begin(), p.load.end());
  if (std::abs(peak - 1.0) > 1e-9) throw ScenarioError("load pattern must peak at exactly 1");
  return p;
}

Patterns subsample(const Patterns& patterns, int stride, int offset) {
  if (stride < 1 || offset < 0) throw ScenarioError("invalid subsampling stride/offset");
  Patterns out;
  for (std::size_t i = offset; i < patterns.price.size(); i += stride) {
    out.price.push_back(patterns.price[i]);
    out.load.push_back(patterns.load[i]);
  }
  return out;
}

Scenario synthesize_scenario(const Patterns& patterns, const std::vector<GeneratorParams>& generators,
                             const BessParams& bess, double peak_load_mw, const PriceRatios& ratios,
                             const RequirementFractions& fractions, const SynthesisOptions& options) {
  if (patterns.price.size() != patterns.load.size() || patterns.price.empty())
    throw ScenarioError("patterns must be non-empty and of equal length");
  if (!(peak_load_mw > 0.0)) throw ScenarioError("peak load must be positive");
  if (!(ratios.reserve > 0.0 && ratios.reg_capacity > 0.0 && ratios.reg_mileage > 0.0))
    throw ScenarioError("price ratios must be positive");
  if (!(fractions.reserve > 0.0 && fractions.reg_capacity > 0.0 && fractions.mileage_multiple > 0.0))
    throw ScenarioError("requirement fractions must be positive");

  Scenario s;
  s.generators = generators;
  s.bess = bess;
  s.market_mask = options.market_mask;
  for (std::size_t t = 0; t < patterns.price.size(); ++t) {
    IntervalData iv;
    iv.index = static_cast<int>(t) + 1;
    iv.delta_t = options.delta_t;
    iv.load = peak_load_mw * patterns.load[t];
    iv.reserve_req = fractions.reserve * iv.load;
    iv.regcap_req = fractions.reg_capacity * iv.load;
    iv.mileage_req = fractions.mileage_multiple * iv.regcap_req;
    double top = 0.0;
    for (const auto& g : generators) {
      GeneratorBids b;
      b.energy = g.base_price_bid * patterns.price[t];
      b.reserve = ratios.reserve * b.energy;
      b.reg_capacity = ratios.reg_capacity * b.energy;
      b.reg_mileage = ratios.reg_mileage * b.energy;
      top = std::max(top, b.energy + b.reserve + b.reg_capacity + b.reg_mileage);
      iv.generator_bids.push_back(b);
    }
    iv.bess_bids.demand = options.demand_price_multiple * top;
    s.intervals.push_back(std::move(iv));
  }
  const auto violations = validate_scenario(s);
  if (!violations.empty()) {
    std::string msg = "synthesized scenario is invalid:";
    for (const auto& v : violations) msg += "\n  " + v.field + ": " + v.message;
    throw ScenarioError(msg);
  }
  return s;
}

std::vector<Violation> validate_scenario(const Scenario& s) {
  std::vector<Violation> out;
  auto bad = [&](std::string field, std::string msg) { out.push_back({std::move(field), std::move(msg)}); };
  auto finite = [](double v) { return std::isfinite(v); };

  for (int j = 0; j < s.num_generators(); ++j) {
    const auto& g = s.generators[j];
    const std::string f = "generators[" + std::to_string(j) + "]";
    if (!finite(g.base_price_bid)) bad(f + ".base_price_bid", "must be finite");
    if (!(g.p_min >= 0.0)) bad(f + ".p_min", "must be >= 0");
    if (!(g.p_min <= g.p_max)) bad(f + ".p_max", "must be >= p_min");
    if (!(g.reserve_ramp >= 0.0)) bad(f + ".reserve_ramp", "must be >= 0");
    if (!(g.regulation_ramp >= 0.0)) bad(f + ".regulation_ramp", "must be >= 0");
    if (!(g.mileage_multiplier >= 1.0)) bad(f + ".mileage_multiplier", "must be >= 1");
  }

  const auto& b = s.bess;
  if (!(b.power_rate >= 0.0)) bad("bess.power_rate", "must be >= 0");
  if (!(b.mileage_multiplier >= 1.0)) bad("bess.mileage_multiplier", "must be >= 1");
  if (!(b.soc_min >= 0.0)) bad("bess.soc_min", "must be >= 0");
  if (!(b.soc_init >= b.soc_min)) bad("bess.soc_init", "must be >= soc_min");
  if (!(b.soc_init <= b.soc_max)) bad("bess.soc_init", "must be <= soc_max");
  if (!(b.soc_max <= b.energy_capacity)) bad("bess.soc_max", "must be <= energy_capacity");

  if (s.intervals.empty()) bad("intervals", "at least one interval is required");
  double cap = 0.0, rs_ramp = 0.0, rg_ramp = 0.0, mileage_cap = 0.0;
  for (const auto& g : s.generators) {
    cap += g.p_max;
    rs_ramp += g.reserve_ramp;
    rg_ramp += g.regulation_ramp;
    mileage_cap += g.mileage_multiplier * g.regulation_ramp;
  }
  for (int t = 0; t < s.num_intervals(); ++t) {
    const auto& iv = s.intervals[t];
    const std::string f = "intervals[" + std::to_string(t) + "]";
    if (!(iv.delta_t > 0.0)) bad(f + ".delta_t", "must be > 0");
    if (!(iv.load > 0.0)) bad(f + ".load", "must be > 0");
    if (!(iv.reserve_req >= 0.0)) bad(f + ".reserve_req", "must be >= 0");
    if (!(iv.regcap_req >= 0.0)) bad(f + ".regcap_req", "must be >= 0");
    if (!(iv.mileage_req >= 0.0)) bad(f + ".mileage_req", "must be >= 0");
    if (static_cast<int>(iv.generator_bids.size()) != s.num_generators())
      bad(f + ".generator_bids", "one bid set per generator is required");
    for (const auto& gb : iv.generator_bids)
      if (!finite(gb.energy) || !finite(gb.reserve) || !finite(gb.reg_capacity) || !finite(gb.reg_mileage))
        bad(f + ".generator_bids", "must be finite");
    const auto& bb = iv.bess_bids;
    if (!finite(bb.supply) || !finite(bb.demand) || !finite(bb.reserve) || !finite(bb.reg_capacity) ||
        !finite(bb.reg_mileage))
      bad(f + ".bess_bids", "must be finite");
    if (iv.load + iv.reserve_req + iv.regcap_req > cap + 1e-9)
      bad(f + ".feasibility", "load plus reserve and regulation requirements exceed total generator capacity");
    if (iv.reserve_req > rs_ramp + 1e-9) bad(f + ".feasibility", "reserve requirement exceeds generator reserve ramps");
    if (iv.regcap_req > rg_ramp + 1e-9)
      bad(f + ".feasibility", "regulation requirement exceeds generator regulation ramps");
    if (iv.mileage_req > mileage_cap + 1e-9)
      bad(f + ".feasibility", "mileage requirement exceeds generator mileage capability");
  }
  return out;
}

std::vector<GeneratorParams> reference_generators() {
  return {
      {"G1", 10.0, 400.0, 0.0, 80.0, 40.0, 10.0},
      {"G2", 14.0, 300.0, 0.0, 60.0, 30.0, 10.0},
      {"G3", 15.0, 210.0, 0.0, 42.0, 21.0, 10.0},
      {"G4", 30.0, 350.0, 0.0, 70.0, 35.0, 10.0},
      {"G5", 40.0, 270.0, 0.0, 54.0, 27.0, 10.0},
  };
}

BessParams reference_bess() { return {400.0, 40.0, 0.0, 0.0, 400.0, 10.0}; }

Scenario desk_scenario(const Patterns& full_day, const MarketMask& mask) {
  const auto table = reference_generators();
  std::vector<GeneratorParams> gens;
  for (int row : {0, 1, 3}) {
    auto g = table[row];
    g.p_max *= kDeskCapacityScale;
    g.reserve_ramp *= kDeskCapacityScale;
    g.regulation_ramp *= kDeskCapacityScale;
    gens.push_back(g);
  }
  const int stride = std::max<int>(1, static_cast<int>(full_day.price.size()) / 24);
  SynthesisOptions opt;
  opt.market_mask = mask;
  const BessParams bess{100.0, 10.0, 0.0, 0.0, 100.0, 10.0};
  return synthesize_scenario(subsample(full_day, stride), gens, bess, 250.0, {}, {}, opt);
}

Scenario reference_scenario(const Patterns& patterns, const MarketMask& mask) {
  SynthesisOptions opt;
  opt.market_mask = mask;
  return synthesize_scenario(patterns, reference_generators(), reference_bess(), 1000.0, {}, {}, opt);
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["schema"] = kScenarioSchema;
  j["market_mask"] = {{"energy", s.market_mask.energy},
                      {"reserve", s.market_mask.reserve},
                      {"regulation", s.market_mask.regulation}};
  j["bess"] = {{"energy_capacity_mwh", s.bess.energy_capacity}, {"power_rate_mw", s.bess.power_rate},
               {"soc_init_mwh", s.bess.soc_init},           {"soc_min_mwh", s.bess.soc_min},
               {"soc_max_mwh", s.bess.soc_max},             {"mileage_multiplier", s.bess.mileage_multiplier}};
  j["generators"] = json::array();
  for (const auto& g : s.generators)
    j["generators"].push_back({{"id", g.id},
                               {"base_price_bid_usd_per_mwh", g.base_price_bid},
                               {"p_max_mw", g.p_max},
                               {"p_min_mw", g.p_min},
                               {"reserve_ramp_mw", g.reserve_ramp},
                               {"regulation_ramp_mw", g.regulation_ramp},
                               {"mileage_multiplier", g.mileage_multiplier}});
  j["intervals"] = json::array();
  for (const auto& iv : s.intervals) {
    json bids = json::array();
    for (const auto& b : iv.generator_bids)
      bids.push_back({{"energy", b.energy},
                      {"reserve", b.reserve},
                      {"reg_capacity", b.reg_capacity},
                      {"reg_mileage", b.reg_mileage}});
    const auto& bb = iv.bess_bids;
    j["intervals"].push_back({{"index", iv.index},
                              {"delta_t_h", iv.delta_t},
                              {"load_mw", iv.load},
                              {"reserve_req_mw", iv.reserve_req},
                              {"regcap_req_mw", iv.regcap_req},
                              {"mileage_req_mw", iv.mileage_req},
                              {"generator_bids_usd_per_mwh", bids},
                              {"bess_bids_usd_per_mwh",
                               {{"supply", bb.supply},
                                {"demand", bb.demand},
                                {"reserve", bb.reserve},
                                {"reg_capacity", bb.reg_capacity},
                                {"reg_mileage", bb.reg_mileage}}}});
  }
  return j.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario document is not valid JSON: ") + e.what());
  }
  if (j.value("schema", std::string{}) != kScenarioSchema)
    throw ScenarioError(std::string("unsupported scenario schema, expected ") + kScenarioSchema);
  try {
    Scenario s;
    const auto& m = j.at("market_mask");
    s.market_mask = {m.at("energy").get<bool>(), m.at("reserve").get<bool>(), m.at("regulation").get<bool>()};
    const auto& b = j.at("bess");
    s.bess = {b.at("energy_capacity_mwh").get<double>(), b.at("power_rate_mw").get<double>(),
              b.at("soc_init_mwh").get<double>(),        b.at("soc_min_mwh").get<double>(),
              b.at("soc_max_mwh").get<double>(),         b.at("mileage_multiplier").get<double>()};
    for (const auto& g : j.at("generators"))
      s.generators.push_back({g.at("id").get<std::string>(), g.at("base_price_bid_usd_per_mwh").get<double>(),
                              g.at("p_max_mw").get<double>(), g.at("p_min_mw").get<double>(),
                              g.at("reserve_ramp_mw").get<double>(), g.at("regulation_ramp_mw").get<double>(),
                              g.at("mileage_multiplier").get<double>()});
    for (const auto& t : j.at("intervals")) {
      IntervalData iv;
      iv.index = t.at("index").get<int>();
      iv.delta_t = t.at("delta_t_h").get<double>();
      iv.load = t.at("load_mw").get<double>();
      iv.reserve_req = t.at("reserve_req_mw").get<double>();
      iv.regcap_req = t.at("regcap_req_mw").get<double>();
      iv.mileage_req = t.at("mileage_req_mw").get<double>();
      for (const auto& gb : t.at("generator_bids_usd_per_mwh"))
        iv.generator_bids.push_back({gb.at("energy").get<double>(), gb.at("reserve").get<double>(),
                                     gb.at("reg_capacity").get<double>(), gb.at("reg_mileage").get<double>()});
      const auto& bb = t.at("bess_bids_usd_per_mwh");
      iv.bess_bids = {bb.at("supply").get<double>(), bb.at("demand").get<double>(), bb.at("reserve").get<double>(),
                      bb.at("reg_capacity").get<double>(), bb.at("reg_mileage").get<double>()};
      s.intervals.push_back(std::move(iv));
    }
    return s;
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("malformed scenario document: ") + e.what());
  }
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ScenarioError("cannot write " + path.string());
  out << scenario_to_json(s);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

}  // namespace stratbid
