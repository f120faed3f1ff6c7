#pragma once

#include "aris/bf_stage.hpp"
#include "aris/conic.hpp"
#include "aris/metrics.hpp"

#include <stdexcept>

namespace aris {

// Lifted quantities for the RIS design at fixed beamformers, built around
// the stacked vector [theta; 1] with theta_n = conj(RisVector entry n).
struct LiftedData {
  int N = 0, K = 0;
  Eigen::MatrixXcd a;                             // a(k,i) = h_b,k^H w_i
  std::vector<std::vector<Eigen::VectorXcd>> b;   // b[k][i] = diag(h_r,k^H) G w_i
  std::vector<std::vector<conic::HMat>> S;        // S[k][j], (N+1)x(N+1)
  std::vector<conic::HMat> Qt;                    // per beam i, zero-padded
  std::vector<conic::HMat> Zt;                    // per user k, zero-padded
};

struct RisOptions {
  bool passive = false;  // unit-modulus lift: diag(T) pinned to 1, no budget
};

struct IppaResult {
  conic::HMat T;
  RisVector theta;
  Eigen::VectorXd tau, delta;            // residual slacks (0 where inactive)
  std::vector<double> penalty_history;   // tr(T) - lambda_max(T) per iteration
  int iterations = 0;
  bool converged = false;
  double rank_residual = 0.0;            // (tr - lambda_max)/lambda_max
};

class StageInfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

LiftedData lift(const ChannelSet& ch, const BfSolution& sol, const Scenario& scn);

// Slack-augmented penalized SDP linearized at T_ref (one SCA step).
conic::SdpProblem build_p7(const LiftedData& ld, const Scenario& scn,
                           const conic::HMat& T_ref, const BfSolution& sol,
                           const RisOptions& opt = {});

// Inner SCA loop driving T to rank one.
IppaResult ippa(const LiftedData& ld, const Scenario& scn, const conic::HMat& T0,
                const BfSolution& sol, const RisOptions& opt = {});

// Dominant-eigenpair extraction of the RIS vector from a lifted solution.
RisVector extract_theta(const conic::HMat& T);

// T = [theta_vec; 1][theta_vec; 1]^H for a given RIS vector.
conic::HMat lift_theta(const RisVector& theta);

}  // namespace aris
