#pragma once

#include "aris/bcd.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace aris {

inline constexpr int kSchemaVersion = 1;

// Locale-independent fixed formatting used in every emitted file.
std::string format_number(double v);

// Single-run JSON report: scenario snapshot, trace, final audit margins.
std::string run_report_json(const RunResult& r, const Scenario& scn,
                            const std::string& csi_note = "");

// Sweep CSV, one row per (scheme, value, trial).
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

// Per-cell means with 95% normal-approximation intervals.
std::string sweep_summary_json(const std::vector<SweepRow>& rows);

// Per-iteration f1 trajectories: seed, p_max_W, iter, f1_W.
void write_convergence_csv(std::ostream& os,
                           const std::vector<std::pair<std::uint64_t, double>>& cells,
                           const std::vector<RunTrace>& traces);

}  // namespace aris
