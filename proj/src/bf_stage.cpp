#include "aris/bf_stage.hpp"

#include "aris/eh.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace aris {

namespace {

using conic::Constraint;
using conic::HMat;
using conic::SdpProblem;
using conic::Sense;
using Eigen::VectorXcd;

HMat e00() { return (HMat(2, 2) << 1, 0, 0, 0).finished(); }
HMat e11() { return (HMat(2, 2) << 0, 0, 0, 1).finished(); }
HMat sym01() { return (HMat(2, 2) << 0, 0.5, 0.5, 0).finished(); }
HMat asym01() {
  HMat a(2, 2);
  a << 0.0, std::complex<double>(0, -0.5), std::complex<double>(0, 0.5), 0.0;
  return a;
}

struct P3Build {
  SdpProblem prob;
  // layout
  std::vector<int> wblk, pw_idx;           // Gram blocks, or power scalars (fallback)
  std::vector<int> rho_idx;    // -1 where absent
  std::vector<int> yblk, eblk; // scaled epigraph blocks, -1 where absent
  // cached data
  std::vector<VectorXcd> h;      // effective channels
  std::vector<double> cv;        // sigma_v^2 * sum |h_r|^2 |theta|^2, W
  std::vector<double> R;         // required EH input power / eta, W
  std::vector<double> rho_fix;   // valid when rho frozen
  bool rho_free = true;
};

// Assembles (P3), either over Gram matrices W_k or, when `dirs` is given,
// over per-user powers along fixed beam directions (rank-one fallback).
P3Build make_p3(const ChannelSet& ch, const RisVector& theta, const Scenario& scn,
                const StageOptions& opt, const std::vector<VectorXcd>* dirs,
                double headroom) {
  const int K = scn.K;
  const int M = scn.M;
  P3Build b;
  b.rho_free = (opt.fixed_rho == nullptr);
  b.wblk.assign(K, -1);
  b.pw_idx.assign(K, -1);
  b.rho_idx.assign(K, -1);
  b.yblk.assign(K, -1);
  b.eblk.assign(K, -1);
  b.h.resize(K);
  b.cv.resize(K);
  b.R.assign(K, 0.0);
  b.rho_fix.assign(K, 0.0);

  EhModel eh(scn.eh_a, scn.eh_b, scn.eh_c);
  for (int k = 0; k < K; ++k) {
    b.h[k] = effective_channel(ch, theta, k);
    double acc = 0.0;
    for (int n = 0; n < theta.v.size(); ++n)
      acc += std::norm(ch.h_r[k](n)) * std::norm(theta.v(n));
    b.cv[k] = scn.sigma2_v * acc;
    if (scn.e_mw[k] > 0.0)
      b.R[k] = 1e-3 * eh.required_input(scn.e_mw[k]) / scn.eta[k];
    if (!b.rho_free)
      b.rho_fix[k] = std::clamp((*opt.fixed_rho)[k], scn.rho_min, 1.0 - scn.rho_min);
  }

  SdpProblem& p = b.prob;
  // signal-power coefficient |h_k^H w_i|^2 as a term on user i's variable
  auto add_quad = [&](Constraint& c, int k, int i, double coeff) {
    if (dirs) {
      const double g = std::norm(b.h[k].dot((*dirs)[i]));
      c.scalars.push_back({b.pw_idx[i], coeff * g});
    } else {
      c.blocks.push_back({b.wblk[i], coeff * (b.h[k] * b.h[k].adjoint())});
    }
  };

  for (int k = 0; k < K; ++k) {
    if (dirs) {
      b.pw_idx[k] = p.add_scalar();
      p.objective_scalars.push_back({b.pw_idx[k], 1.0});
    } else {
      b.wblk[k] = p.add_block("W" + std::to_string(k), M);
      p.objective_blocks.push_back({b.wblk[k], HMat::Identity(M, M)});
    }
  }
  if (b.rho_free) {
    for (int k = 0; k < K; ++k) {
      b.rho_idx[k] = p.add_scalar();
      // epigraph blocks are kept in congruence-scaled form so every entry is
      // O(1): Y = [[s/delta^2, 1],[1, rho]], E = [[t/R, 1],[1, 1-rho]]
      if (scn.gamma[k] > 0.0 && scn.delta2[k] > 0.0)
        b.yblk[k] = p.add_block("Y" + std::to_string(k), 2);
      if (b.R[k] > 0.0) b.eblk[k] = p.add_block("E" + std::to_string(k), 2);
    }
  }

  for (int k = 0; k < K; ++k) {
    if (scn.gamma[k] > 0.0) {  // SINR
      Constraint c;
      c.sense = Sense::Ge;
      for (int i = 0; i < K; ++i)
        add_quad(c, k, i, i == k ? 1.0 / scn.gamma[k] : -1.0);
      c.rhs = scn.sigma2[k] + b.cv[k];
      if (b.rho_free) {
        if (b.yblk[k] >= 0)
          c.blocks.push_back({b.yblk[k], -scn.delta2[k] * e00()});
      } else {
        c.rhs += scn.delta2[k] / b.rho_fix[k];
      }
      p.constraints.push_back(std::move(c));
    }
    if (b.R[k] > 0.0) {  // EH input power
      Constraint c;
      c.sense = Sense::Ge;
      for (int i = 0; i < K; ++i) add_quad(c, k, i, 1.0);
      if (b.rho_free) {
        c.blocks.push_back({b.eblk[k], -b.R[k] * e00()});
        c.rhs = -b.cv[k];
      } else {
        c.rhs = b.R[k] / (1.0 - b.rho_fix[k]) - b.cv[k];
      }
      p.constraints.push_back(std::move(c));
    }
  }

  if (b.rho_free) {
    for (int k = 0; k < K; ++k) {
      // y00 * rho_k >= 1 encodes s_k = delta_k^2 y00 >= delta_k^2 / rho_k
      if (b.yblk[k] >= 0) {
        Constraint c2{{{b.yblk[k], sym01()}}, {}, Sense::Eq, 1.0};
        Constraint c3{{{b.yblk[k], asym01()}}, {}, Sense::Eq, 0.0};
        Constraint c4{{{b.yblk[k], e11()}}, {{b.rho_idx[k], -1.0}}, Sense::Eq, 0.0};
        p.constraints.push_back(c2);
        p.constraints.push_back(c3);
        p.constraints.push_back(c4);
      }
      // x00 * (1 - rho_k) >= 1 encodes t_k = R_k x00 >= R_k / (1 - rho_k)
      if (b.eblk[k] >= 0) {
        Constraint c2{{{b.eblk[k], sym01()}}, {}, Sense::Eq, 1.0};
        Constraint c3{{{b.eblk[k], asym01()}}, {}, Sense::Eq, 0.0};
        Constraint c4{{{b.eblk[k], e11()}}, {{b.rho_idx[k], 1.0}}, Sense::Eq, 1.0};
        p.constraints.push_back(c2);
        p.constraints.push_back(c3);
        p.constraints.push_back(c4);
      }
      Constraint lo{{}, {{b.rho_idx[k], 1.0}}, Sense::Ge, scn.rho_min};
      Constraint hi{{}, {{b.rho_idx[k], 1.0}}, Sense::Le, 1.0 - scn.rho_min};
      p.constraints.push_back(lo);
      p.constraints.push_back(hi);
    }
  }

  if (opt.reflect_constraint && scn.N > 0) {
    const double fixed_noise = scn.sigma2_v * theta.v.squaredNorm();
    if (fixed_noise > scn.p_max)
      throw P3InfeasibleError("P3: RIS dynamic noise alone exceeds p_max");
    HMat refl = ch.G.adjoint() * theta.v.cwiseAbs2().asDiagonal() * ch.G;
    if (refl.norm() > 0.0) {
      Constraint c;
      c.sense = Sense::Le;
      // headroom so the feasibility repair can scale the beams back up to the
      // audited budget; must exceed the solver's worst relative SINR slack
      c.rhs = std::max(0.0, scn.p_max * (1.0 - headroom) - fixed_noise);
      for (int i = 0; i < K; ++i) {
        if (dirs) {
          const VectorXcd& q = (*dirs)[i];
          c.scalars.push_back({b.pw_idx[i], (q.adjoint() * refl * q)(0).real()});
        } else {
          c.blocks.push_back({b.wblk[i], refl});
        }
      }
      p.constraints.push_back(std::move(c));
    }
  }
  return b;
}

}  // namespace

conic::SdpProblem build_p3(const ChannelSet& ch, const RisVector& theta,
                           const Scenario& scn, const StageOptions& opt) {
  return make_p3(ch, theta, scn, opt, nullptr, 1e-3).prob;
}

namespace {

// One build/solve/extract/repair pass at a fixed reflect headroom. On return
// *scale_left is the further uniform power factor the constraints would still
// need; > 1 means the repair ran out of budget room.
P3Result solve_p3_attempt(const ChannelSet& ch, const RisVector& theta,
                          const Scenario& scn, const StageOptions& opt,
                          double headroom, double* scale_left) {
  P3Build b = make_p3(ch, theta, scn, opt, nullptr, headroom);
  conic::SdpSolution s = conic::solve(b.prob);
  if (s.status == conic::SolveStatus::Infeasible) {
    for (int k = 0; k < scn.K; ++k)
      if (b.h[k].norm() < 1e-12)
        throw P3InfeasibleError("P3 infeasible: zero effective channel for user " +
                                std::to_string(k));
    throw P3InfeasibleError("P3 infeasible");
  }
  if (s.status != conic::SolveStatus::Optimal)
    throw std::runtime_error("P3 solver numerical failure");

  P3Result r;
  r.status = s.status;
  r.W.resize(scn.K);
  r.w.resize(scn.K);
  r.rho.resize(scn.K);
  r.rank_residual.assign(scn.K, 0.0);
  bool need_fallback = false;
  for (int k = 0; k < scn.K; ++k) {
    r.W[k] = s.blocks[b.wblk[k]];
    auto [v, resid] = conic::evd_rank1(r.W[k]);
    r.w[k] = v;
    r.rank_residual[k] = resid;
    r.rho[k] = b.rho_free ? std::clamp(s.scalars(b.rho_idx[k]), scn.rho_min,
                                       1.0 - scn.rho_min)
                          : b.rho_fix[k];
    if (resid > 1e-6) need_fallback = true;
  }

  if (need_fallback) {
    // the optimal face is degenerate and the interior-point iterate sits at
    // its center; a tiny signal-aligned objective tilt selects a rank-one
    // vertex at a ~1e-5 relative objective cost
    P3Build pb = make_p3(ch, theta, scn, opt, nullptr, headroom);
    const double eps =
        std::getenv("ARIS_P3_EPS") ? atof(std::getenv("ARIS_P3_EPS")) : 1e-5;
    for (int k = 0; k < scn.K; ++k) {
      const double hn2 = pb.h[k].squaredNorm();
      if (hn2 > 0.0)
        pb.prob.objective_blocks.push_back(
            {pb.wblk[k], (-eps / hn2) * (pb.h[k] * pb.h[k].adjoint())});
    }
    conic::SdpSolution ps = conic::solve(pb.prob);
    if (std::getenv("ARIS_P3_TRACE"))
      std::fprintf(stderr, "p3 vertex pass: status %d gap %.2e\n", (int)ps.status,
                   ps.gap);
    if (ps.status == conic::SolveStatus::Optimal) {
      need_fallback = false;
      for (int k = 0; k < scn.K; ++k) {
        r.W[k] = ps.blocks[pb.wblk[k]];
        auto [v, resid] = conic::evd_rank1(r.W[k]);
        r.w[k] = v;
        r.rank_residual[k] = resid;
        if (std::getenv("ARIS_P3_TRACE"))
          std::fprintf(stderr, "  user %d resid %.2e\n", k, resid);
        r.rho[k] = pb.rho_free ? std::clamp(ps.scalars(pb.rho_idx[k]), scn.rho_min,
                                            1.0 - scn.rho_min)
                               : pb.rho_fix[k];
        if (resid > 1e-6) need_fallback = true;
      }
    }
  }

  if (need_fallback) {
    // re-solve with the extracted directions fixed to recover feasibility
    std::vector<VectorXcd> dirs(scn.K);
    for (int k = 0; k < scn.K; ++k) {
      if (r.w[k].norm() > 1e-12)
        dirs[k] = r.w[k].normalized();
      else
        dirs[k] = b.h[k].norm() > 0 ? b.h[k].normalized()
                                    : VectorXcd::Unit(scn.M, 0);
    }
    P3Build fb = make_p3(ch, theta, scn, opt, &dirs, headroom);
    conic::SdpSolution fs = conic::solve(fb.prob);
    if (fs.status != conic::SolveStatus::Optimal)
      throw std::runtime_error("P3 rank-one fallback failed");
    for (int k = 0; k < scn.K; ++k) {
      r.w[k] = std::sqrt(std::max(0.0, fs.scalars(fb.pw_idx[k]))) * dirs[k];
      r.W[k] = r.w[k] * r.w[k].adjoint();
      r.rank_residual[k] = 0.0;
      r.rho[k] = fb.rho_free ? std::clamp(fs.scalars(fb.rho_idx[k]), scn.rho_min,
                                          1.0 - scn.rho_min)
                             : fb.rho_fix[k];
    }
    r.used_fallback = true;
  }

  // Interior-point output sits a hair inside or outside the constraint set;
  // a uniform power scale-up restores strict feasibility (it raises every
  // SINR and EH level) at a sub-0.1% objective cost.
  auto needed_scale = [&]() {
    double t = 1.0;
    for (int k = 0; k < scn.K; ++k) {
      double sig = std::norm(b.h[k].dot(r.w[k]));
      double interf = 0.0, recv = sig;
      for (int i = 0; i < scn.K; ++i)
        if (i != k) {
          const double q = std::norm(b.h[k].dot(r.w[i]));
          interf += q;
          recv += q;
        }
      if (scn.gamma[k] > 0.0) {
        const double noise = scn.sigma2[k] + b.cv[k] + scn.delta2[k] / r.rho[k];
        const double head = sig - scn.gamma[k] * interf;
        if (head <= 0.0)
          throw P3InfeasibleError("P3: extracted SINR not repairable");
        t = std::max(t, scn.gamma[k] * noise / head);
      }
      if (b.R[k] > 0.0 && recv > 0.0)
        t = std::max(t, (b.R[k] / (1.0 - r.rho[k]) - b.cv[k]) / recv);
    }
    return t;
  };
  const double t = needed_scale();
  if (t > 1.0) {
    double t_use = t * (1.0 + 1e-9);
    if (opt.reflect_constraint && scn.N > 0) {
      // never repair past the reflect budget; anything the cap leaves unfixed
      // is reported back so the caller can retry with a larger headroom
      const double fixed_noise = scn.sigma2_v * theta.v.squaredNorm();
      const Eigen::MatrixXcd refl =
          ch.G.adjoint() * theta.v.cwiseAbs2().asDiagonal() * ch.G;
      double quad = 0.0;
      for (int k = 0; k < scn.K; ++k)
        quad += (r.w[k].adjoint() * refl * r.w[k])(0).real();
      if (quad > 0.0)
        t_use = std::min(t_use, std::max(1.0, (scn.p_max - fixed_noise) / quad));
    }
    const double s = std::sqrt(t_use);
    for (int k = 0; k < scn.K; ++k) {
      r.w[k] *= s;
      r.W[k] = r.w[k] * r.w[k].adjoint();
    }
  }
  *scale_left = needed_scale();

  r.objective = 0.0;
  for (int k = 0; k < scn.K; ++k) r.objective += r.w[k].squaredNorm();
  return r;
}

// With one user the problem separates: at fixed rho the optimal beam is
// w = sqrt(S) (I + nu R)^-1 h / (h^H (I + nu R)^-1 h) with nu >= 0 picked so
// the reflect budget holds, and the required signal power S(rho) is convex.
// Solving this directly is exact where the SDP route is only approximate.
P3Result solve_p3_single(const ChannelSet& ch, const RisVector& theta,
                         const Scenario& scn, const StageOptions& opt) {
  const VectorXcd h = effective_channel(ch, theta, 0);
  const double hn2 = h.squaredNorm();
  double cv = 0.0;
  for (int n = 0; n < theta.v.size(); ++n)
    cv += std::norm(ch.h_r[0](n)) * std::norm(theta.v(n));
  cv *= scn.sigma2_v;
  double req = 0.0;
  if (scn.e_mw[0] > 0.0) {
    EhModel eh(scn.eh_a, scn.eh_b, scn.eh_c);
    req = 1e-3 * eh.required_input(scn.e_mw[0]) / scn.eta[0];
  }

  const bool capped = opt.reflect_constraint && scn.N > 0;
  Eigen::MatrixXcd R;
  double budget = 0.0;
  if (capped) {
    const double fixed_noise = scn.sigma2_v * theta.v.squaredNorm();
    if (fixed_noise > scn.p_max)
      throw P3InfeasibleError("P3: RIS dynamic noise alone exceeds p_max");
    R = ch.G.adjoint() * theta.v.cwiseAbs2().asDiagonal() * ch.G;
    budget = scn.p_max - fixed_noise;
  }

  auto beam = [&](double s_req) {
    VectorXcd w = VectorXcd::Zero(scn.M);
    if (s_req <= 0.0) return w;
    if (hn2 <= 0.0)
      throw P3InfeasibleError("P3 infeasible: zero effective channel for user 0");
    auto at_nu = [&](double nu) {
      const Eigen::MatrixXcd lhs =
          Eigen::MatrixXcd::Identity(scn.M, scn.M) + nu * R;
      const VectorXcd d = lhs.ldlt().solve(h);
      return VectorXcd(std::sqrt(s_req) / h.dot(d).real() * d);
    };
    w = std::sqrt(s_req) / hn2 * h;
    if (!capped || (w.adjoint() * R * w)(0).real() <= budget) return w;
    double lo = 0.0, hi = 1.0;
    auto used = [&](double nu) {
      const VectorXcd v = at_nu(nu);
      return (v.adjoint() * R * v)(0).real();
    };
    while (used(hi) > budget) {
      hi *= 4.0;
      if (hi > 1e30)
        throw P3InfeasibleError("P3 infeasible: reflect budget unattainable");
    }
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (used(mid) > budget ? lo : hi) = mid;
    }
    return at_nu(hi);
  };

  auto s_req_at = [&](double rho) {
    double s = 0.0;
    if (scn.gamma[0] > 0.0)
      s = scn.gamma[0] * (scn.sigma2[0] + cv + scn.delta2[0] / rho);
    if (req > 0.0) s = std::max(s, req / (1.0 - rho) - cv);
    return s;
  };

  double rho;
  if (opt.fixed_rho) {
    rho = std::clamp((*opt.fixed_rho)[0], scn.rho_min, 1.0 - scn.rho_min);
  } else {
    auto power_at = [&](double r) { return beam(s_req_at(r)).squaredNorm(); };
    double lo = scn.rho_min, hi = 1.0 - scn.rho_min;
    for (int i = 0; i < 120; ++i) {
      const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      if (power_at(m1) < power_at(m2)) hi = m2;
      else lo = m1;
    }
    rho = 0.5 * (lo + hi);
  }

  P3Result r;
  r.status = conic::SolveStatus::Optimal;
  r.w.assign(1, beam(s_req_at(rho)));
  r.W.assign(1, r.w[0] * r.w[0].adjoint());
  r.rho.assign(1, rho);
  r.rank_residual.assign(1, 0.0);
  r.objective = r.w[0].squaredNorm();
  return r;
}

}  // namespace

P3Result solve_p3(const ChannelSet& ch, const RisVector& theta, const Scenario& scn,
                  const StageOptions& opt) {
  if (scn.K == 1) return solve_p3_single(ch, theta, scn, opt);
  double headroom = 1e-3;
  for (int attempt = 0;; ++attempt) {
    double scale_left = 1.0;
    P3Result r = solve_p3_attempt(ch, theta, scn, opt, headroom, &scale_left);
    // within half the audit tolerance, or out of retries
    if (scale_left <= 1.0 + 5e-5 || attempt == 2) return r;
    headroom = std::min(0.1, std::max(4.0 * (scale_left - 1.0), 4.0 * headroom));
  }
}

}  // namespace aris
