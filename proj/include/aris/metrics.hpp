#pragma once

#include "aris/scene.hpp"

#include <vector>

namespace aris {

// Joint RIS coefficient vector; entry n is p_n * e^{j theta_n}, i.e. the
// n-th diagonal of the RIS precoding matrix. All-zeros = RIS off.
struct RisVector {
  Eigen::VectorXcd v;

  static RisVector off(int n) { return {Eigen::VectorXcd::Zero(n)}; }
};

// Per-user beamformers and power-splitting ratios.
struct BfSolution {
  std::vector<Eigen::VectorXcd> w;  // length M each
  std::vector<double> rho;          // in (0,1)
};

// Total BS-to-user-k channel: h_k = h_b,k + G^H diag(conj(theta)) h_r,k,
// so that h_k^H w = h_r,k^H diag(theta) G w + h_b,k^H w.
Eigen::VectorXcd effective_channel(const ChannelSet& ch, const RisVector& theta, int k);

// Received SINR at user k, Eq. (1) form (linear).
double sinr(const ChannelSet& ch, const RisVector& theta, const BfSolution& sol,
            const Scenario& scn, int k);

// Post-EH harvested power at user k, in mW.
double harvested_mw(const ChannelSet& ch, const RisVector& theta, const BfSolution& sol,
                    const Scenario& scn, int k);

// RIS output power sum_i ||diag(theta) G w_i||^2 + sigma_v^2 ||theta||^2, W.
double reflect_power(const ChannelSet& ch, const RisVector& theta, const BfSolution& sol,
                     const Scenario& scn);

// BS power plus RIS reflect power, W.
double total_power(const ChannelSet& ch, const RisVector& theta, const BfSolution& sol,
                   const Scenario& scn);

double bs_power(const BfSolution& sol);

// Recomputes every constraint from raw channels.
struct Audit {
  bool ok = false;
  std::vector<double> sinr_margin;  // sinr_k / gamma_k - 1
  std::vector<double> eh_margin;    // harvested_k / e_k - 1 (+inf if e_k = 0)
  double reflect_slack = 0.0;       // 1 - reflect / p_max
};

// Tolerances: SINR >= gamma(1-1e-4), EH >= e(1-1e-4), reflect <= p_max(1+1e-6).
Audit audit_solution(const ChannelSet& ch, const RisVector& theta, const BfSolution& sol,
                     const Scenario& scn, bool check_reflect = true);

}  // namespace aris
