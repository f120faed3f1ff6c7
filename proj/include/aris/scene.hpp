#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace aris {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double dist(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Full system configuration. Powers are carried in watts except the
// energy-harvesting targets and coefficients, which live on the mW scale
// of the fitted EH curve.
struct Scenario {
  int M = 0;  // BS antennas
  int K = 0;  // users
  int N = 0;  // RIS elements (0 = no RIS)

  std::vector<double> gamma;   // per-user SINR threshold, linear
  std::vector<double> e_mw;    // per-user harvested-power target, mW
  std::vector<double> eta;     // energy-conversion efficiency, (0,1]
  double p_max = 0.0;          // max RIS reflect power, W
  std::vector<double> sigma2;  // antenna noise, W
  std::vector<double> delta2;  // ID-circuit noise, W
  double sigma2_v = 0.0;       // active-RIS dynamic noise, W

  double eh_a = 0.0, eh_b = 0.0, eh_c = 0.0;  // EH model fit (mW scale)

  double mu = 0.0;     // rank-one penalty factor
  double alpha = 1.0;  // SINR-residual weight
  double beta = 1.0;   // EH-residual weight
  double zeta = 0.0;   // relative-change convergence tolerance

  double rician_K_dB = 0.0;
  Vec2 bs_pos, ris_pos, cluster_center;
  double cluster_radius = 0.0;
  double kappa_direct = 0.0, kappa_reflect = 0.0;
  double C0_dB = 0.0;  // reference pathloss, dB
  double D0 = 1.0;     // reference distance, m

  // artifact policy knobs
  double rho_min = 1e-4;
  int max_outer = 30;
  int max_sca = 50;

  void validate() const;  // throws std::invalid_argument on bad fields

  // Simulation defaults for given dimensions: K users at gamma = 10 dB,
  // e = -20 dBm, p_max = 10 mW, noise -70/-50/-70 dBm, EH fit
  // (2.463, 1.635, 0.826), mu = 5e-5, zeta = 1e-3, Rician 10 dB,
  // C0 = -30 dB with exponents 3 (direct) and 2.2 (reflected).
  static Scenario defaults(int M, int K, int N);
};

// One realization of the three channel groups.
struct ChannelSet {
  Eigen::MatrixXcd G;                    // N x M, BS -> RIS
  std::vector<Eigen::VectorXcd> h_r;     // per user, length N, RIS -> user
  std::vector<Eigen::VectorXcd> h_b;     // per user, length M, BS -> user
};

// L(d) = 10^(C0_dB/10) * (d/D0)^(-kappa), linear power gain.
double pathloss(double d, double kappa, double C0_dB, double D0);

// Rician channels from the scenario geometry; deterministic per seed.
ChannelSet gen_channels(const Scenario& scn, std::uint64_t seed);

// Per-entry CSI perturbation h + e, e ~ CN(0, xi*|h|^2).
ChannelSet perturb_csi(const ChannelSet& ch, double xi, std::uint64_t seed);

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_w(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

}  // namespace aris
