#pragma once

#include "aris/conic.hpp"
#include "aris/metrics.hpp"

#include <stdexcept>

namespace aris {

// Per-stage knobs shared by the beamformer and RIS stages.
struct StageOptions {
  bool reflect_constraint = true;               // enforce the RIS power budget
  const std::vector<double>* fixed_rho = nullptr;  // freeze PS ratios (benchmarks)
};

struct P3Result {
  std::vector<conic::HMat> W;          // Gram matrices, M x M
  std::vector<Eigen::VectorXcd> w;     // extracted beamformers
  std::vector<double> rho;
  double objective = 0.0;              // sum_k tr(W_k), W
  std::vector<double> rank_residual;   // lambda2/lambda1 per user
  bool used_fallback = false;
  conic::SolveStatus status = conic::SolveStatus::NumericalFailure;
};

class P3InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Beamformer/PS-ratio SDP at fixed RIS coefficients. The 1/rho and
// 1/(1-rho) terms enter through 2x2 PSD epigraph blocks, so the whole
// problem is one conic solve.
conic::SdpProblem build_p3(const ChannelSet& ch, const RisVector& theta,
                           const Scenario& scn, const StageOptions& opt = {});

P3Result solve_p3(const ChannelSet& ch, const RisVector& theta, const Scenario& scn,
                  const StageOptions& opt = {});

}  // namespace aris
