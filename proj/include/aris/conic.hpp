#pragma once

#include <Eigen/Dense>
#include <complex>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace aris::conic {

using HMat = Eigen::MatrixXcd;

// One Hermitian coefficient attached to a PSD block.
struct BlockTerm {
  int block = -1;
  HMat coeff;  // Hermitian, dim matching the block
};

struct ScalarTerm {
  int index = -1;
  double coeff = 0.0;
};

enum class Sense { Eq, Le, Ge };

// Real-linear constraint sum_b <A_b, X_b> + sum_j c_j s_j (sense) rhs,
// with <A, X> = Re tr(A X) (real for Hermitian arguments).
struct Constraint {
  std::vector<BlockTerm> blocks;
  std::vector<ScalarTerm> scalars;
  Sense sense = Sense::Eq;
  double rhs = 0.0;
};

// Linear SDP over Hermitian PSD blocks plus nonnegative scalars.
struct SdpProblem {
  std::vector<std::pair<std::string, int>> psd_blocks;
  int num_scalars = 0;
  std::vector<BlockTerm> objective_blocks;    // minimize
  std::vector<ScalarTerm> objective_scalars;
  std::vector<Constraint> constraints;

  int add_block(const std::string& name, int dim) {
    psd_blocks.emplace_back(name, dim);
    return (int)psd_blocks.size() - 1;
  }
  int add_scalar() { return num_scalars++; }

  // Plain-text dump (block sizes + constraint triplets) for offline inspection.
  void dump(std::ostream& os) const;
};

enum class SolveStatus { Optimal, Infeasible, NumericalFailure };

struct SdpSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  std::vector<HMat> blocks;
  Eigen::VectorXd scalars;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
};

struct SolverSettings {
  double tol_feas = 1e-9;
  double tol_gap = 1e-9;
  // contract bound for reporting Optimal; iterations aim lower
  double accept_feas = 1e-7;
  double accept_gap = 1e-7;
  // last-resort bound applied to the best iterate after every refinement
  // phase has run; callers repair residuals at this level
  double salvage_feas = 1e-6;
  double salvage_gap = 1e-5;
  int max_iter = 100;
  double step_frac = 0.98;
};

// [[Re X, -Im X], [Im X, Re X]]; PSD iff X is, trace doubled.
Eigen::MatrixXd embed_hermitian(const HMat& X);

// Dominant eigenpair scaled to v = sqrt(lambda1) u1, plus lambda2/lambda1.
// Largest-magnitude entry of v made real nonnegative.
std::pair<Eigen::VectorXcd, double> evd_rank1(const HMat& X);

SdpSolution solve(const SdpProblem& p, const SolverSettings& settings = {});

}  // namespace aris::conic
