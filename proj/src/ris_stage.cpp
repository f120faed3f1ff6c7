#include "aris/ris_stage.hpp"

#include "aris/eh.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace aris {

namespace {

using conic::Constraint;
using conic::HMat;
using conic::SdpProblem;
using conic::Sense;
using Eigen::VectorXcd;

HMat corner_unit(int n1) {
  HMat e = HMat::Zero(n1, n1);
  e(n1 - 1, n1 - 1) = 1.0;
  return e;
}

double lambda_max(const HMat& t) {
  Eigen::SelfAdjointEigenSolver<HMat> es(0.5 * (t + t.adjoint()),
                                         Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

struct P7Layout {
  std::vector<int> tau_idx, delta_idx;  // -1 where the user has no constraint
};

SdpProblem make_p7(const LiftedData& ld, const Scenario& scn, const HMat& t_ref,
                   const BfSolution& sol, const RisOptions& opt, P7Layout* lay,
                   double mu) {
  const int K = ld.K;
  const int n1 = ld.N + 1;
  const double sv2 = opt.passive ? 0.0 : scn.sigma2_v;

  EhModel eh(scn.eh_a, scn.eh_b, scn.eh_c);
  SdpProblem p;
  const int tb = p.add_block("T", n1);

  lay->tau_idx.assign(K, -1);
  lay->delta_idx.assign(K, -1);
  for (int k = 0; k < K; ++k) {
    if (scn.gamma[k] > 0.0) lay->tau_idx[k] = p.add_scalar();
    if (scn.e_mw[k] > 0.0) lay->delta_idx[k] = p.add_scalar();
  }

  // f3 = (1/2mu)(tr T - u1^H T u1) - sum(alpha tau + beta delta)
  Eigen::SelfAdjointEigenSolver<HMat> es(0.5 * (t_ref + t_ref.adjoint()));
  const VectorXcd u1 = es.eigenvectors().col(n1 - 1);
  const HMat pen = (HMat::Identity(n1, n1) - u1 * u1.adjoint()) / (2.0 * mu);
  p.objective_blocks.push_back({tb, pen});
  for (int k = 0; k < K; ++k) {
    // weight each relative surplus by the user's beam power so the margin sum
    // tracks the transmit power the next beamformer stage can actually save
    const double pk = sol.w[k].squaredNorm();
    if (lay->tau_idx[k] >= 0)
      p.objective_scalars.push_back({lay->tau_idx[k], -scn.alpha * pk});
    if (lay->delta_idx[k] >= 0)
      p.objective_scalars.push_back({lay->delta_idx[k], -scn.beta * pk});
  }

  // lifting normalization on the corner element
  p.constraints.push_back({{{tb, corner_unit(n1)}}, {}, Sense::Eq, 1.0});
  if (opt.passive) {  // unit-modulus elements
    for (int n = 0; n < ld.N; ++n) {
      HMat e = HMat::Zero(n1, n1);
      e(n, n) = 1.0;
      p.constraints.push_back({{{tb, e}}, {}, Sense::Eq, 1.0});
    }
  }

  for (int k = 0; k < K; ++k) {
    const double sigt = scn.sigma2[k] + scn.delta2[k] / sol.rho[k];
    double interf_const = 0.0;  // sum_{j!=k} |a_kj|^2
    for (int j = 0; j < K; ++j)
      if (j != k) interf_const += std::norm(ld.a(k, j));

    if (lay->tau_idx[k] >= 0) {
      // SINR with residual: signal >= (gamma+tau) * (interference + noise);
      // the tau * interference cross term is evaluated at T_ref to stay linear
      HMat coeff = ld.S[k][k];
      for (int j = 0; j < K; ++j)
        if (j != k) coeff -= scn.gamma[k] * ld.S[k][j];
      if (sv2 > 0.0) coeff -= scn.gamma[k] * sv2 * ld.Zt[k];

      double omega = sigt + interf_const;  // per-unit-tau weight
      for (int j = 0; j < K; ++j)
        if (j != k) omega += (ld.S[k][j].cwiseProduct(t_ref.transpose())).sum().real();
      if (sv2 > 0.0)
        omega += sv2 * (ld.Zt[k].cwiseProduct(t_ref.transpose())).sum().real();

      Constraint c;
      c.sense = Sense::Ge;
      c.blocks.push_back({tb, coeff});
      // tau is the relative SINR surplus: gamma -> gamma (1 + tau)
      c.scalars.push_back({lay->tau_idx[k], -scn.gamma[k] * omega});
      c.rhs = scn.gamma[k] * (sigt + interf_const) - std::norm(ld.a(k, k));
      p.constraints.push_back(std::move(c));
    }

    if (lay->delta_idx[k] >= 0) {
      // EH with residual: total received power >= (P_req + delta)/(1 - rho)
      const double req_w = 1e-3 * eh.required_input(scn.e_mw[k]) / scn.eta[k];
      HMat coeff = HMat::Zero(n1, n1);
      double csum = 0.0;
      for (int j = 0; j < K; ++j) {
        coeff += ld.S[k][j];
        csum += std::norm(ld.a(k, j));
      }
      if (sv2 > 0.0) coeff += sv2 * ld.Zt[k];
      Constraint c;
      c.sense = Sense::Ge;
      c.blocks.push_back({tb, coeff});
      // delta is the relative EH surplus: P_req -> P_req (1 + delta)
      c.scalars.push_back({lay->delta_idx[k], -req_w / (1.0 - sol.rho[k])});
      c.rhs = req_w / (1.0 - sol.rho[k]) - csum;
      p.constraints.push_back(std::move(c));
    }
  }

  if (!opt.passive) {  // RIS reflect-power budget
    HMat coeff = scn.sigma2_v * (HMat::Identity(n1, n1) - corner_unit(n1));
    for (int i = 0; i < K; ++i) coeff += ld.Qt[i];
    // small headroom so the rank-one extraction stays inside the raw budget
    p.constraints.push_back({{{tb, coeff}}, {}, Sense::Le, scn.p_max * (1.0 - 1e-5)});
  }
  return p;
}

}  // namespace

LiftedData lift(const ChannelSet& ch, const BfSolution& sol, const Scenario& scn) {
  const int N = (int)ch.G.rows();
  const int K = scn.K;
  if ((int)sol.w.size() != K) throw std::invalid_argument("lift: beamformer count");
  LiftedData ld;
  ld.N = N;
  ld.K = K;
  ld.a.resize(K, K);
  ld.b.assign(K, std::vector<VectorXcd>(K));
  ld.S.assign(K, std::vector<HMat>(K));
  ld.Qt.resize(K);
  ld.Zt.resize(K);

  std::vector<VectorXcd> gw(K);
  for (int i = 0; i < K; ++i) {
    gw[i] = ch.G * sol.w[i];
    ld.Qt[i] = HMat::Zero(N + 1, N + 1);
    ld.Qt[i].topLeftCorner(N, N).diagonal() = gw[i].cwiseAbs2();
  }
  for (int k = 0; k < K; ++k) {
    ld.Zt[k] = HMat::Zero(N + 1, N + 1);
    ld.Zt[k].topLeftCorner(N, N).diagonal() = ch.h_r[k].cwiseAbs2();
    for (int i = 0; i < K; ++i) {
      ld.a(k, i) = ch.h_b[k].dot(sol.w[i]);
      ld.b[k][i] = ch.h_r[k].conjugate().cwiseProduct(gw[i]);
      HMat s = HMat::Zero(N + 1, N + 1);
      s.topLeftCorner(N, N) = ld.b[k][i] * ld.b[k][i].adjoint();
      s.topRightCorner(N, 1) = ld.b[k][i] * std::conj(ld.a(k, i));
      s.bottomLeftCorner(1, N) = (s.topRightCorner(N, 1)).adjoint();
      ld.S[k][i] = std::move(s);
    }
  }
  return ld;
}

conic::SdpProblem build_p7(const LiftedData& ld, const Scenario& scn, const HMat& t_ref,
                           const BfSolution& sol, const RisOptions& opt) {
  P7Layout lay;
  return make_p7(ld, scn, t_ref, sol, opt, &lay, scn.mu);
}

HMat lift_theta(const RisVector& theta) {
  const int n = (int)theta.v.size();
  VectorXcd th(n + 1);
  th.head(n) = theta.v.conjugate();
  th(n) = 1.0;
  return th * th.adjoint();
}

RisVector extract_theta(const HMat& t) {
  const int n1 = (int)t.rows();
  auto [v, resid] = conic::evd_rank1(t);
  (void)resid;
  if (std::abs(v(n1 - 1)) < 1e-9)
    throw ExtractionError("extract_theta: degenerate lifted constant entry");
  const VectorXcd th = v.head(n1 - 1) / v(n1 - 1);
  return {th.conjugate()};
}

IppaResult ippa(const LiftedData& ld, const Scenario& scn, const HMat& t0,
                const BfSolution& sol, const RisOptions& opt) {
  IppaResult r;
  HMat t_ref = t0;
  double prev_f3 = 0.0;
  bool have_prev = false;

  for (int j = 0; j < scn.max_sca; ++j) {
    // penalty continuation: start with a loose rank penalty so the surface
    // coefficients can move, then tighten it down to the configured factor
    const double mu = std::max(scn.mu, 1.0 * std::pow(0.1, j));
    const bool mu_final = (mu == scn.mu);
    P7Layout lay;
    SdpProblem prob = make_p7(ld, scn, t_ref, sol, opt, &lay, mu);
    conic::SdpSolution s = conic::solve(prob);
    if (s.status == conic::SolveStatus::Infeasible)
      throw StageInfeasibleError("P7 infeasible at the current beamformers");
    if (s.status != conic::SolveStatus::Optimal) {
      // keep the last good surface when a later refinement round wobbles
      if (r.iterations == 0)
        throw StageInfeasibleError("P7 solver numerical failure");
      break;
    }

    r.T = s.blocks[0];
    r.iterations = j + 1;
    r.tau = Eigen::VectorXd::Zero(ld.K);
    r.delta = Eigen::VectorXd::Zero(ld.K);
    for (int k = 0; k < ld.K; ++k) {
      if (lay.tau_idx[k] >= 0) r.tau(k) = s.scalars(lay.tau_idx[k]);
      if (lay.delta_idx[k] >= 0) r.delta(k) = s.scalars(lay.delta_idx[k]);
    }

    const double lmax = lambda_max(r.T);
    const double penalty = r.T.trace().real() - lmax;
    r.penalty_history.push_back(penalty);
    r.rank_residual = penalty / std::max(lmax, 1e-300);

    const double f3 = s.objective;
    const bool f3_settled =
        have_prev && std::abs(f3 - prev_f3) / std::max(std::abs(prev_f3), 1e-12) < scn.zeta;
    if (f3_settled && r.rank_residual <= 1e-4) {
      r.converged = true;
      break;
    }
    // only compare objectives evaluated at the same (final) penalty factor
    prev_f3 = f3;
    have_prev = mu_final;
    t_ref = r.T;
  }
  r.theta = extract_theta(r.T);
  return r;
}

}  // namespace aris
