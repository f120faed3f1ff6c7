#pragma once

#include "aris/metrics.hpp"
#include "aris/ris_stage.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace aris {

enum class Scheme {
  Active,             // full BCD, active RIS
  ActiveRandomRho,    // BCD with frozen random PS ratios
  Passive,            // unit-modulus RIS, no dynamic noise
  PassiveRandomRho,
  PassiveRandomPhase, // fixed random phases, beamformer stage only
  NoRis,
};

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);
bool scheme_is_active(Scheme s);

struct IterRecord {
  double f1 = 0.0;       // BS power, W
  double reflect = 0.0;  // RIS output power, W (0 for passive schemes)
  double total = 0.0;
  int ippa_iters = 0;
  double w_rank_residual = 0.0;  // worst over users
  double t_rank_residual = 0.0;
  bool audit_ok = false;
};

struct RunTrace {
  Scheme scheme = Scheme::Active;
  std::uint64_t seed = 0;
  std::vector<IterRecord> iters;
  bool converged = false;
  bool stalled = false;
  double wall_ms = 0.0;
  std::vector<double> sinr_margin, eh_margin;
  double final_f1 = 0.0, final_reflect = 0.0, final_total = 0.0;
  std::string note;
};

struct RunResult {
  BfSolution sol;
  RisVector theta;
  RunTrace trace;
};

class RunInfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Alternates the beamformer and RIS stages until the BS power settles.
RunResult bcd_solve(const ChannelSet& ch, const Scenario& scn, std::uint64_t seed);

RunResult run_scheme(Scheme scheme, const ChannelSet& ch, const Scenario& scn,
                     std::uint64_t seed);

enum class Axis { M, N, Xi, Pmax };
std::string axis_name(Axis a);
Axis axis_from_name(const std::string& name);

struct SweepRow {
  Scheme scheme;
  Axis axis;
  double axis_value = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  bool failed = false;     // stage error; row still emitted
  bool converged = false;
  int iterations = 0;
  double f1 = 0.0, reflect = 0.0, total = 0.0;
  double min_sinr_margin = 0.0, min_eh_margin = 0.0;
  double wall_ms = 0.0;
  bool true_csi_violation = false;  // only meaningful on the xi axis
};

// Deterministic per-cell seed split.
std::uint64_t trial_seed(std::uint64_t seed0, double axis_value, int trial, Scheme s);

// Regenerates channels per (value, trial) and runs every scheme. On the xi
// axis the design runs on perturbed CSI and the audit is repeated on the
// true channels.
std::vector<SweepRow> sweep(const Scenario& base, Axis axis,
                            const std::vector<double>& values, int trials,
                            std::uint64_t seed0, const std::vector<Scheme>& schemes,
                            int workers = 1);

}  // namespace aris
