#include "aris/bcd.hpp"
#include "aris/config.hpp"
#include "aris/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace aris;

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::vector<Scheme> parse_schemes(const std::string& csv) {
  std::vector<Scheme> out;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(scheme_from_name(item));
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open output file '" + path + "'");
  return f;
}

int cmd_solve(const std::string& config, std::uint64_t seed, const std::string& scheme,
              const std::string& out_path) {
  const Scenario scn = load_scenario(config);
  const ChannelSet ch = gen_channels(scn, seed);
  RunResult r;
  try {
    r = run_scheme(scheme_from_name(scheme), ch, scn, seed);
  } catch (const RunInfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  }
  const std::string report =
      run_report_json(r, scn, "CSI error, when enabled, applies to all channel groups");
  if (out_path.empty()) {
    std::cout << report;
  } else {
    open_out(out_path) << report;
  }
  if (r.trace.stalled) return 3;
  return r.trace.converged ? 0 : 3;
}

int cmd_sweep(const std::string& config, const std::string& axis,
              const std::string& values, int trials, const std::string& schemes,
              std::uint64_t seed, int workers, bool report_timing,
              const std::string& out_path) {
  const Scenario scn = load_scenario(config);
  std::vector<SweepRow> rows =
      sweep(scn, axis_from_name(axis), parse_values(values), trials, seed,
            parse_schemes(schemes), workers);
  // wall time is the one non-deterministic column; keep reruns byte-identical
  // unless timing is explicitly requested
  if (!report_timing)
    for (SweepRow& r : rows) r.wall_ms = 0.0;
  {
    auto f = open_out(out_path);
    write_sweep_csv(f, rows);
  }
  open_out(out_path + ".summary.json") << sweep_summary_json(rows);
  for (const SweepRow& r : rows)
    if (r.failed)
      std::cerr << "warning: trial failed: scheme=" << scheme_name(r.scheme)
                << " value=" << r.axis_value << " trial=" << r.trial << "\n";
  return 0;
}

int cmd_convergence(const std::string& config, const std::string& seeds_csv,
                    const std::string& pmax_csv, const std::string& out_path) {
  const Scenario base = load_scenario(config);
  std::vector<std::pair<std::uint64_t, double>> cells;
  std::vector<RunTrace> traces;
  for (double pm : parse_values(pmax_csv)) {
    for (double sd : parse_values(seeds_csv)) {
      const auto seed = (std::uint64_t)sd;
      Scenario scn = base;
      scn.p_max = pm;
      const ChannelSet ch = gen_channels(scn, seed);
      RunResult r = bcd_solve(ch, scn, seed);
      cells.emplace_back(seed, pm);
      traces.push_back(r.trace);
    }
  }
  auto f = open_out(out_path);
  write_convergence_csv(f, cells, traces);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transmit-power minimization for an active-RIS SWIPT downlink"};
  app.require_subcommand(1);

  std::string config, out_path, scheme = "active", axis = "N";
  std::string values, schemes = "active", seeds = "1", pmaxes = "0.01,0.015";
  std::uint64_t seed = 1;
  int trials = 1, workers = 1;
  bool report_timing = false;

  auto* solve = app.add_subcommand("solve", "run one scheme on one realization");
  solve->add_option("config", config, "scenario file")->required();
  solve->add_option("--seed", seed);
  solve->add_option("--scheme", scheme);
  solve->add_option("--out", out_path, "JSON report path (default stdout)");

  auto* sw = app.add_subcommand("sweep", "averaged scheme comparison over an axis");
  sw->add_option("config", config)->required();
  sw->add_option("--axis", axis, "M | N | xi | p_max");
  sw->add_option("--values", values, "comma-separated axis values")->required();
  sw->add_option("--trials", trials);
  sw->add_option("--schemes", schemes, "comma-separated scheme names");
  sw->add_option("--seed", seed);
  sw->add_option("--workers", workers);
  sw->add_flag("--report-timing", report_timing,
               "emit measured wall_ms instead of 0 (breaks rerun determinism)");
  sw->add_option("--out", out_path, "CSV path")->required();

  auto* conv = app.add_subcommand("convergence", "per-iteration f1 trajectories");
  conv->add_option("config", config)->required();
  conv->add_option("--seeds", seeds, "comma-separated seeds");
  conv->add_option("--pmax-list", pmaxes, "comma-separated budgets, W");
  conv->add_option("--out", out_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(config, seed, scheme, out_path);
    if (sw->parsed())
      return cmd_sweep(config, axis, values, trials, schemes, seed, workers,
                       report_timing, out_path);
    if (conv->parsed()) return cmd_convergence(config, seeds, pmaxes, out_path);
  } catch (const aris::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
