#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stratbid/harness.hpp"
#include "stratbid/mps.hpp"

using namespace stratbid;
namespace fs = std::filesystem;

namespace {

enum Exit {
  kOk = 0,
  kError = 1,
  kUsage = 2,
  kInfeasible = 3,
  kVerificationFailed = 4,
  kTimeLimit = 5,
};

struct Common {
  int threads = 1;
  double gap = 0.01;
  double time_limit = 600.0;
  std::uint64_t seed = 0;
};

fs::path default_data_dir() {
  if (const char* d = std::getenv("STRATBID_DATA_DIR")) return d;
  return STRATBID_DEFAULT_DATA_DIR;
}

MarketMask parse_mask(int case_id, const std::string& mask) {
  if (mask.empty()) return MarketMask::for_case(case_id);
  MarketMask m{false, false, false};
  std::stringstream ss(mask);
  for (std::string part; std::getline(ss, part, '+');) {
    if (part == "E") m.energy = true;
    else if (part == "Rs") m.reserve = true;
    else if (part == "Rg") m.regulation = true;
    else throw CLI::ValidationError("--mask", "unknown market '" + part + "' (use E, Rs, Rg joined by +)");
  }
  return m;
}

std::string money(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%12.4f", v);
  return buf;
}

void print_report(const CaseReport& r) {
  std::printf("%s [%s]  status %s  objective %.6f  bound %.6f  gap %.3g%%  nodes %ld  %.1f s\n", r.label().c_str(),
              r.mask.label().c_str(), std::string(solver::to_string(r.status)).c_str(), r.objective, r.best_bound,
              100.0 * r.gap, r.nodes, r.seconds);
  std::printf("  MILP %d variables, %d constraints, %d binaries; decomposition rounds %d\n", r.counts.variables,
              r.counts.constraints, r.counts.binaries, r.decomposition_rounds);
  if (!r.verified) return;
  const auto& t = r.totals();
  std::printf("  revenue  energy %s  reserve %s  reg cap %s  reg mileage %s  total %s\n", money(t.energy).c_str(),
              money(t.reserve).c_str(), money(t.reg_capacity).c_str(), money(t.reg_mileage).c_str(),
              money(t.total()).c_str());
  std::printf("  verification passed (%zu notes); AGC excursion flags %d of %d intervals\n",
              r.verification_notes.size(), r.agc.excursion_flags, r.agc.intervals_checked);
  for (const auto& f : r.files) std::printf("  wrote %s\n", f.string().c_str());
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

int status_exit(const CaseReport& r) {
  if (!r.verified) return r.status == solver::SolveStatus::kTimeLimit ? kTimeLimit : kInfeasible;
  if (r.status == solver::SolveStatus::kTimeLimit || r.status == solver::SolveStatus::kIterationLimit) return kTimeLimit;
  return kOk;
}

RunSettings run_settings(const Common& c, bool decomposition) {
  RunSettings s;
  s.gap = c.gap;
  s.time_limit_seconds = c.time_limit;
  s.seed = c.seed;
  s.decomposition = decomposition;
  return s;
}

std::vector<BessQuantityBids> read_bids(const fs::path& path, int intervals) {
  std::vector<BessQuantityBids> bids(intervals);
  if (path.empty()) return bids;
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  int t = 0, n = 0;
  while (std::getline(f, line)) {
    ++n;
    double v[4] = {0, 0, 0, 0};
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2], &v[3]) != 4) {
      if (n == 1) continue;  // header
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": expected supply,demand,reserve,regulation");
    }
    if (t >= intervals) throw std::runtime_error(path.string() + ": more rows than intervals");
    bids[t++] = {v[0], v[1], v[2], v[3]};
  }
  if (t != intervals) throw std::runtime_error(path.string() + ": " + std::to_string(t) + " rows for " +
                                               std::to_string(intervals) + " intervals");
  return bids;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strategic bidding of a price-maker battery in joint energy, reserve and regulation markets"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file with option defaults; flags override it");

  Common c;
  app.add_option("--threads", c.threads, "Cases solved in parallel by compare")
      ->envname("STRATBID_THREADS")
      ->check(CLI::PositiveNumber);
  app.add_option("--gap", c.gap, "Relative MILP gap tolerance")->envname("STRATBID_GAP")->check(CLI::NonNegativeNumber);
  app.add_option("--time-limit", c.time_limit, "Seconds per MILP solve")
      ->envname("STRATBID_TIME_LIMIT")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", c.seed, "Seed for node ordering and AGC traces")->envname("STRATBID_SEED");

  // synth
  auto* synth = app.add_subcommand("synth", "Synthesize a scenario file from the price and load patterns");
  fs::path synth_out, price_file, load_file;
  int intervals = 96, synth_case = 4;
  double peak = 1000.0;
  bool desk = false;
  synth->add_option("-o,--out", synth_out, "Scenario file to write")->required();
  synth->add_option("--intervals", intervals, "Intervals per day (a divisor of the pattern length)")
      ->check(CLI::PositiveNumber);
  synth->add_option("--peak", peak, "Peak load, MW")->check(CLI::PositiveNumber);
  synth->add_flag("--desk", desk, "Reduced 24-interval, 3-unit scenario (ignores --intervals and --peak)");
  synth->add_option("--case", synth_case, "Market mask stored in the file")->check(CLI::Range(1, 4));
  synth->add_option("--price-pattern", price_file, "Price pattern CSV")->check(CLI::ExistingFile);
  synth->add_option("--load-pattern", load_file, "Load pattern CSV")->check(CLI::ExistingFile);

  // shared by the scenario-driven subcommands
  fs::path scenario_file;
  int case_id = 4;
  std::string mask_text;
  auto scenario_opts = [&](CLI::App* sub) {
    sub->add_option("-s,--scenario", scenario_file, "Scenario file")->required()->check(CLI::ExistingFile);
    auto* co = sub->add_option("--case", case_id, "Participation case 1-4")->check(CLI::Range(1, 4));
    sub->add_option("--mask", mask_text, "Custom market mask such as E+Rg")->excludes(co);
  };

  auto* clear = app.add_subcommand("clear", "Clear every interval for given BESS bids (price-taker view)");
  scenario_opts(clear);
  fs::path bids_file, clear_out;
  clear->add_option("--bids", bids_file, "CSV of supply,demand,reserve,regulation per interval (default zero)")
      ->check(CLI::ExistingFile);
  clear->add_option("-o,--out", clear_out, "Clearing CSV to write");

  auto* solve = app.add_subcommand("solve", "Solve the bilevel bidding problem for one case");
  scenario_opts(solve);
  fs::path out_dir = "out";
  bool no_decomposition = false;
  solve->add_option("-o,--out", out_dir, "Output directory");
  solve->add_flag("--no-decomposition", no_decomposition, "Skip the interval decomposition bound");

  auto* oracle = app.add_subcommand("oracle", "Brute-force grid oracle for tiny instances");
  scenario_opts(oracle);
  double step = 0.5;
  bool oracle_milp = false;
  oracle->add_option("--step", step, "Bid grid step, MW")->check(CLI::PositiveNumber);
  oracle->add_flag("--milp", oracle_milp, "Also solve the MILP and compare");

  auto* exp = app.add_subcommand("export-mps", "Write the bilevel MILP in fixed MPS format");
  scenario_opts(exp);
  fs::path mps_out;
  exp->add_option("-o,--out", mps_out, "MPS file")->required();

  auto* agc = app.add_subcommand("agc-check", "Track AGC signals on a solved schedule");
  scenario_opts(agc);
  fs::path schedule_file, signal_file;
  agc->add_option("--schedule", schedule_file, "Interval CSV written by solve")->required()->check(CLI::ExistingFile);
  agc->add_option("--signal", signal_file, "Signal CSV used for every interval instead of synthetic traces")
      ->check(CLI::ExistingFile);

  auto* cmp = app.add_subcommand("compare", "Solve several cases on one scenario and compare revenues");
  cmp->add_option("-s,--scenario", scenario_file, "Scenario file")->required()->check(CLI::ExistingFile);
  std::vector<int> cases{1, 2, 3, 4};
  cmp->add_option("--cases", cases, "Cases to run")->delimiter(',')->check(CLI::Range(1, 4));
  cmp->add_option("-o,--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    const MarketMask mask = parse_mask(case_id, mask_text);
    auto load = [&] {
      auto s = load_scenario(scenario_file);
      s.market_mask = mask;
      return s;
    };

    if (*synth) {
      const auto dir = default_data_dir();
      const auto p = load_patterns(price_file.empty() ? dir / "price_pattern_96.csv" : price_file,
                                   load_file.empty() ? dir / "load_pattern_96.csv" : load_file);
      Scenario s;
      if (desk) {
        s = desk_scenario(p, MarketMask::for_case(synth_case));
      } else {
        const int n = static_cast<int>(p.price.size());
        if (n % intervals != 0)
          throw CLI::ValidationError("--intervals", std::to_string(intervals) + " does not divide " + std::to_string(n));
        SynthesisOptions opt;
        opt.market_mask = MarketMask::for_case(synth_case);
        s = synthesize_scenario(subsample(p, n / intervals), reference_generators(), reference_bess(), peak, {}, {},
                                opt);
      }
      ensure_parent(synth_out);
      save_scenario(s, synth_out);
      std::printf("wrote %s: %d intervals, %d generators\n", synth_out.string().c_str(), s.num_intervals(),
                  s.num_generators());
      return kOk;
    }

    if (*clear) {
      const auto s = load();
      const auto res = clear_horizon(s, read_bids(bids_file, s.num_intervals()));
      std::printf("interval  energy  reserve  reg_cap  reg_mileage  objective\n");
      for (const auto& r : res)
        std::printf("%8d %7.3f %8.3f %8.3f %12.3f %10.3f\n", r.interval + 1, r.prices.energy, r.prices.reserve,
                    r.prices.reg_capacity, r.prices.reg_mileage, r.objective);
      if (!clear_out.empty()) {
        ensure_parent(clear_out);
        write_clearing_csv(res, clear_out);
        std::printf("wrote %s\n", clear_out.string().c_str());
      }
      return kOk;
    }

    if (*solve) {
      auto r = run_case(load(), mask, run_settings(c, !no_decomposition));
      if (r.verified) emit_outputs(r, out_dir);
      print_report(r);
      return status_exit(r);
    }

    if (*oracle) {
      const auto s = load();
      OracleSettings os;
      os.step = step;
      const auto res = brute_force_oracle(s, os);
      std::printf("oracle revenue %.6f  grid points %ld  clearings %ld  feasible visited %ld\n", res.revenue,
                  res.grid_points, res.clearings, res.feasible);
      for (std::size_t t = 0; t < res.bids.size(); ++t)
        std::printf("  interval %zu  supply %.3f  demand %.3f  reserve %.3f  regulation %.3f\n", t + 1,
                    res.bids[t].supply, res.bids[t].demand, res.bids[t].reserve, res.bids[t].regulation);
      if (oracle_milp) {
        const auto r = run_case(s, mask, run_settings(c, true));
        print_report(r);
        const bool ok = r.verified && r.objective >= res.revenue - 1e-5;
        std::printf("MILP %s oracle - 1e-5\n", ok ? ">=" : "<");
        if (!ok) return kVerificationFailed;
        return status_exit(r);
      }
      return kOk;
    }

    if (*exp) {
      const auto s = load();
      const auto m = assemble_milp(s);
      ensure_parent(mps_out);
      solver::export_mps(m.milp, mps_out, "STRATBID");
      std::printf("wrote %s: %d variables, %d constraints, %d binaries\n", mps_out.string().c_str(),
                  m.counts.variables, m.counts.constraints, m.counts.binaries);
      return kOk;
    }

    if (*agc) {
      const auto s = load();
      const auto sched = read_schedule_csv(schedule_file);
      std::optional<AgcTrace> fixed;
      if (!signal_file.empty()) fixed = read_signal_csv(signal_file);
      int flags = 0;
      std::printf("interval  reg_cap  max_excursion  regulation_dSOC  min_soc  max_soc  flag  trace_mileage  "
                  "awarded_mileage\n");
      for (const auto& iv : sched.intervals) {
        const auto trace = fixed ? *fixed : generate_signal(c.seed + static_cast<std::uint64_t>(iv.index));
        const auto r = simulate_tracking(s.bess, iv.position(), trace);
        flags += r.excursion_flag();
        std::printf("%8d %8.3f %14.6f %16.3g %8.3f %8.3f %5s %14.3f %16.3f\n", iv.index, iv.award.reg_capacity,
                    r.max_excursion, r.regulation_delta + 0.0, r.min_soc, r.max_soc, r.excursion_flag() ? "YES" : "no",
                    r.trace_mileage, r.awarded_mileage);
      }
      std::printf("%d of %zu intervals leave [soc_min, soc_max]\n", flags, sched.intervals.size());
      return kOk;
    }

    if (*cmp) {
      const auto base = load_scenario(scenario_file);
      std::vector<CaseReport> reports(cases.size());
      std::vector<std::future<void>> running;
      for (std::size_t i = 0; i < cases.size(); ++i) {
        if (static_cast<int>(running.size()) >= c.threads) {
          running.front().get();
          running.erase(running.begin());
        }
        running.push_back(std::async(std::launch::async, [&, i] {
          reports[i] = run_case(base, MarketMask::for_case(cases[i]), run_settings(c, true));
        }));
      }
      for (auto& f : running) f.get();
      int code = kOk;
      for (auto& r : reports) {
        if (r.verified) emit_outputs(r, out_dir);
        print_report(r);
        code = std::max(code, status_exit(r));
      }
      const auto table = compare_cases(reports);
      fs::create_directories(out_dir);
      std::ofstream(out_dir / "comparison.csv", std::ios::binary) << table.to_csv();
      std::printf("%s", table.to_csv().c_str());
      for (const auto& m : table.checks)
        std::printf("%-8s %s <= %s: %.6f <= %.6f\n", m.holds ? "ok" : "VIOLATED", m.smaller.c_str(), m.larger.c_str(),
                    m.smaller_total, m.larger_total);
      return code;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const VerificationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& m : e.mismatches()) std::cerr << "  " << m << "\n";
    return kVerificationFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kUsage;
}
