#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "stratbid/harness.hpp"
#include "stratbid/mps.hpp"

namespace py = pybind11;
using namespace stratbid;

namespace {

py::dict prices_dict(const MarketPrices& p) {
  py::dict d;
  d["energy"] = p.energy;
  d["reserve"] = p.reserve;
  d["reg_capacity"] = p.reg_capacity;
  d["reg_mileage"] = p.reg_mileage;
  return d;
}

py::dict award_dict(const BessAward& a) {
  py::dict d;
  d["supply"] = a.supply;
  d["demand"] = a.demand;
  d["reserve"] = a.reserve;
  d["reg_capacity"] = a.reg_capacity;
  d["reg_mileage"] = a.reg_mileage;
  return d;
}

py::dict revenue_dict(const RevenueBreakdown& r) {
  py::dict d;
  d["energy"] = r.energy;
  d["reserve"] = r.reserve;
  d["reg_capacity"] = r.reg_capacity;
  d["reg_mileage"] = r.reg_mileage;
  d["total"] = r.total();
  return d;
}

py::dict clearing_dict(const ClearingResult& r) {
  py::dict d;
  d["interval"] = r.interval;
  d["prices"] = prices_dict(r.prices);
  d["bess"] = award_dict(r.bess);
  d["objective"] = r.objective;
  d["duality_gap"] = r.duality_gap;
  d["complementarity"] = r.complementarity;
  return d;
}

MarketMask mask_arg(const py::object& o) {
  if (py::isinstance<py::int_>(o)) return MarketMask::for_case(o.cast<int>());
  return o.cast<MarketMask>();
}

}  // namespace

PYBIND11_MODULE(_stratbid, m) {
  m.doc() = "Bilevel bidding of a price-maker battery in joint energy, reserve and regulation markets";

  py::register_exception<VerificationError>(m, "VerificationError", PyExc_RuntimeError);
  py::register_exception<SizeGuardError>(m, "SizeGuardError", PyExc_RuntimeError);

  py::class_<MarketMask>(m, "MarketMask")
      .def(py::init<bool, bool, bool>(), py::arg("energy") = true, py::arg("reserve") = true,
           py::arg("regulation") = true)
      .def_static("for_case", &MarketMask::for_case, py::arg("case_id"))
      .def_readwrite("energy", &MarketMask::energy)
      .def_readwrite("reserve", &MarketMask::reserve)
      .def_readwrite("regulation", &MarketMask::regulation)
      .def("subset_of", &MarketMask::subset_of)
      .def("label", &MarketMask::label)
      .def("__eq__", [](const MarketMask& a, const MarketMask& b) { return a == b; })
      .def("__repr__", [](const MarketMask& a) { return "MarketMask(" + a.label() + ")"; });

  py::class_<BessParams>(m, "BessParams")
      .def(py::init<>())
      .def_readwrite("energy_capacity", &BessParams::energy_capacity)
      .def_readwrite("power_rate", &BessParams::power_rate)
      .def_readwrite("soc_init", &BessParams::soc_init)
      .def_readwrite("soc_min", &BessParams::soc_min)
      .def_readwrite("soc_max", &BessParams::soc_max)
      .def_readwrite("mileage_multiplier", &BessParams::mileage_multiplier);

  py::class_<BessQuantityBids>(m, "Bids")
      .def(py::init([](double s, double d, double r, double g) { return BessQuantityBids{s, d, r, g}; }),
           py::arg("supply") = 0.0, py::arg("demand") = 0.0, py::arg("reserve") = 0.0, py::arg("regulation") = 0.0)
      .def_readwrite("supply", &BessQuantityBids::supply)
      .def_readwrite("demand", &BessQuantityBids::demand)
      .def_readwrite("reserve", &BessQuantityBids::reserve)
      .def_readwrite("regulation", &BessQuantityBids::regulation);

  py::class_<Scenario>(m, "Scenario")
      .def_static("from_json", &scenario_from_json)
      .def_static("load", &load_scenario, py::arg("path"))
      .def("to_json", &scenario_to_json)
      .def("save", [](const Scenario& s, const std::filesystem::path& p) { save_scenario(s, p); })
      .def_property_readonly("num_intervals", &Scenario::num_intervals)
      .def_property_readonly("num_generators", &Scenario::num_generators)
      .def_readwrite("bess", &Scenario::bess)
      .def_readwrite("market_mask", &Scenario::market_mask)
      .def("validate", [](const Scenario& s) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& v : validate_scenario(s)) out.push_back({v.field, v.message});
        return out;
      })
      .def("digest", &scenario_digest);

  m.def(
      "desk_scenario",
      [](const std::filesystem::path& price, const std::filesystem::path& load, const py::object& mask) {
        return desk_scenario(load_patterns(price, load), mask_arg(mask));
      },
      py::arg("price_pattern"), py::arg("load_pattern"), py::arg("mask") = 4,
      "24-interval, 3-unit scenario built from the 96-point patterns.");
  m.def(
      "reference_scenario",
      [](const std::filesystem::path& price, const std::filesystem::path& load, const py::object& mask) {
        return reference_scenario(load_patterns(price, load), mask_arg(mask));
      },
      py::arg("price_pattern"), py::arg("load_pattern"), py::arg("mask") = 4);

  m.def(
      "clear_interval",
      [](const Scenario& s, int t, const BessQuantityBids& bids) {
        if (t < 0 || t >= s.num_intervals()) throw py::index_error("interval out of range");
        return clearing_dict(clear_interval(build_ll_interval(s, t, bids)));
      },
      py::arg("scenario"), py::arg("t"), py::arg("bids") = BessQuantityBids{},
      "Clears one interval (0-based) for fixed BESS quantity bids.");
  m.def(
      "clear_horizon",
      [](const Scenario& s, const std::vector<BessQuantityBids>& bids) {
        py::list out;
        for (const auto& r : clear_horizon(s, bids)) out.append(clearing_dict(r));
        return out;
      },
      py::arg("scenario"), py::arg("bids"));

  py::class_<CaseReport>(m, "CaseReport")
      .def_readonly("case_id", &CaseReport::case_id)
      .def_readonly("mask", &CaseReport::mask)
      .def_readonly("objective", &CaseReport::objective)
      .def_readonly("best_bound", &CaseReport::best_bound)
      .def_readonly("gap", &CaseReport::gap)
      .def_readonly("nodes", &CaseReport::nodes)
      .def_readonly("seconds", &CaseReport::seconds)
      .def_readonly("verified", &CaseReport::verified)
      .def_readonly("verification_notes", &CaseReport::verification_notes)
      .def_property_readonly("status", [](const CaseReport& r) { return std::string(solver::to_string(r.status)); })
      .def_property_readonly("totals", [](const CaseReport& r) { return revenue_dict(r.totals()); })
      .def_property_readonly("agc_excursions", [](const CaseReport& r) { return r.agc.excursion_flags; })
      .def_property_readonly("schedule",
                             [](const CaseReport& r) {
                               py::list out;
                               for (const auto& i : r.schedule.intervals) {
                                 py::dict d;
                                 d["index"] = i.index;
                                 d["u"] = i.u;
                                 d["bids"] = py::cast(i.bids);
                                 d["award"] = award_dict(i.award);
                                 d["prices"] = prices_dict(i.prices);
                                 d["soc"] = i.soc;
                                 d["revenue"] = revenue_dict(i.revenue);
                                 out.append(d);
                               }
                               return out;
                             })
      .def("label", &CaseReport::label)
      .def("interval_csv", &interval_csv)
      .def("summary_json", &summary_json)
      .def("emit", [](CaseReport& r, const std::filesystem::path& dir) { return emit_outputs(r, dir); });

  m.def(
      "run_case",
      [](const Scenario& s, const py::object& mask, double gap, double time_limit, std::uint64_t seed,
         bool decomposition) {
        RunSettings rs;
        rs.gap = gap;
        rs.time_limit_seconds = time_limit;
        rs.seed = seed;
        rs.decomposition = decomposition;
        const MarketMask mk = mask_arg(mask);
        py::gil_scoped_release release;
        return run_case(s, mk, rs);
      },
      py::arg("scenario"), py::arg("mask") = 4, py::arg("gap") = 0.01, py::arg("time_limit") = 600.0,
      py::arg("seed") = 0, py::arg("decomposition") = true,
      "Solves the bilevel MILP for a case id (1-4) or MarketMask, verifies it and tracks AGC.");

  m.def(
      "compare_cases",
      [](const std::vector<CaseReport>& reports) {
        const auto c = compare_cases(reports);
        py::list checks;
        for (const auto& k : c.checks)
          checks.append(py::make_tuple(k.smaller, k.larger, k.smaller_total, k.larger_total, k.holds));
        py::dict d;
        d["monotone"] = c.monotone();
        d["checks"] = checks;
        d["csv"] = c.to_csv();
        return d;
      },
      py::arg("reports"));

  m.def(
      "brute_force_oracle",
      [](const Scenario& s, double step) {
        OracleSettings os;
        os.step = step;
        OracleResult r;
        {
          py::gil_scoped_release release;
          r = brute_force_oracle(s, os);
        }
        py::dict d;
        d["revenue"] = r.revenue;
        d["bids"] = py::cast(r.bids);
        d["grid_points"] = r.grid_points;
        d["clearings"] = r.clearings;
        return d;
      },
      py::arg("scenario"), py::arg("step") = 0.5);

  m.def(
      "milp_mps",
      [](const Scenario& s) { return solver::to_mps(assemble_milp(s).milp); }, py::arg("scenario"),
      "Fixed-format MPS text of the scenario's bilevel MILP (market mask from the scenario).");

  m.def(
      "generate_signal", [](std::uint64_t seed, int samples) { return generate_signal(seed, samples).signal; },
      py::arg("seed"), py::arg("samples") = kAgcSamplesPerInterval);
  m.def(
      "regulation_soc_delta",
      [](const BessParams& bess, double soc_start, double reg_capacity, const std::vector<double>& signal,
         double delta_t) {
        AgcTrace trace;
        trace.signal = signal;
        trace.sample_seconds = delta_t * 3600.0 / static_cast<double>(signal.size());
        IntervalPosition p{delta_t, soc_start, 0.0, 0.0, 0.0, reg_capacity, 0.0};
        const auto r = simulate_tracking(bess, p, trace);
        return py::make_tuple(r.regulation_delta, r.max_excursion, r.excursion_flag());
      },
      py::arg("bess"), py::arg("soc_start"), py::arg("reg_capacity"), py::arg("signal"), py::arg("delta_t") = 0.25,
      "Tracks a regulation-only position; returns (SOC delta, max excursion, excursion flag).");
}
