#include "aris/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace aris::conic {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

MatrixXcd hsym(const MatrixXcd& u) { return 0.5 * (u + u.adjoint()); }

double re_trace_prod(const MatrixXcd& a, const MatrixXcd& b) {
  return a.cwiseProduct(b.transpose()).sum().real();
}

// ---- standard-form problem: min <C,X> s.t. <A_i,X> = b_i, X in PSD blocks

struct StdForm {
  std::vector<int> dims;
  std::vector<std::vector<std::pair<int, MatrixXcd>>> rows;  // per constraint
  VectorXd b;
  std::vector<MatrixXcd> C;  // per block
  double obj_scale = 1.0;
  std::vector<double> var_scale;  // recover X_b = var_scale[b] * Xtilde_b
  int num_named_blocks = 0;  // leading blocks that map back to the input
  int num_scalars = 0;       // 1x1 blocks right after the named ones
};

StdForm to_standard_form(const SdpProblem& p) {
  StdForm sf;
  sf.num_named_blocks = (int)p.psd_blocks.size();
  sf.num_scalars = p.num_scalars;
  for (const auto& [name, dim] : p.psd_blocks) {
    (void)name;
    if (dim < 1) throw std::invalid_argument("conic: block dimension must be >= 1");
    sf.dims.push_back(dim);
  }
  for (int j = 0; j < p.num_scalars; ++j) sf.dims.push_back(1);

  sf.C.resize(sf.dims.size());
  for (size_t b = 0; b < sf.dims.size(); ++b)
    sf.C[b] = MatrixXcd::Zero(sf.dims[b], sf.dims[b]);
  for (const auto& t : p.objective_blocks) sf.C[t.block] += hsym(t.coeff);
  for (const auto& t : p.objective_scalars)
    sf.C[sf.num_named_blocks + t.index](0, 0) += t.coeff;

  const int m = (int)p.constraints.size();
  sf.rows.resize(m);
  sf.b.resize(m);
  for (int i = 0; i < m; ++i) {
    const Constraint& c = p.constraints[i];
    auto& row = sf.rows[i];
    for (const auto& t : c.blocks) {
      if (t.block < 0 || t.block >= sf.num_named_blocks)
        throw std::invalid_argument("conic: constraint references unknown block");
      if (t.coeff.rows() != sf.dims[t.block] || t.coeff.cols() != sf.dims[t.block])
        throw std::invalid_argument("conic: coefficient dimension mismatch");
      if ((t.coeff - t.coeff.adjoint()).cwiseAbs().maxCoeff() >
          1e-10 * (1.0 + t.coeff.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("conic: coefficient matrix is not Hermitian");
      row.emplace_back(t.block, hsym(t.coeff));
    }
    for (const auto& t : c.scalars) {
      MatrixXcd a(1, 1);
      a(0, 0) = t.coeff;
      row.emplace_back(sf.num_named_blocks + t.index, a);
    }
    sf.b(i) = c.rhs;
    if (c.sense != Sense::Eq) {  // slack turns the inequality into an equality
      sf.dims.push_back(1);
      sf.C.push_back(MatrixXcd::Zero(1, 1));
      MatrixXcd a(1, 1);
      a(0, 0) = (c.sense == Sense::Le) ? 1.0 : -1.0;
      row.emplace_back((int)sf.dims.size() - 1, a);
    }
  }

  // Ruiz equilibration: joint row scales r_i and per-block variable scales
  // d_b so that every nonzero coefficient ends up near unit norm. Plain row
  // normalization is not enough when one row couples O(1e-7) channel
  // quadratics with O(1) slack entries.
  const int nblk = (int)sf.dims.size();
  VectorXd r = VectorXd::Ones(m);
  VectorXd d = VectorXd::Ones(nblk);
  MatrixXd e = MatrixXd::Zero(m, nblk);
  for (int i = 0; i < m; ++i)
    for (const auto& [blk, a] : sf.rows[i]) e(i, blk) = a.norm();
  for (int pass = 0; pass < 12; ++pass) {
    for (int i = 0; i < m; ++i) {
      const double mx = e.row(i).maxCoeff();
      if (mx <= 0.0) continue;
      const double s = std::sqrt(std::clamp(mx, 1e-12, 1e12));
      r(i) *= s;
      e.row(i) /= s;
    }
    for (int b = 0; b < nblk; ++b) {
      const double mx = e.col(b).maxCoeff();
      if (mx <= 0.0) continue;
      const double s = std::sqrt(std::clamp(mx, 1e-12, 1e12));
      d(b) *= s;
      e.col(b) /= s;
    }
  }
  sf.var_scale.resize(nblk);
  for (int b = 0; b < nblk; ++b) {
    sf.var_scale[b] = 1.0 / d(b);
    sf.C[b] /= d(b);  // <C, X> = <C/d, d*Xtilde>
  }
  for (int i = 0; i < m; ++i) {
    for (auto& [blk, a] : sf.rows[i]) a /= r(i) * d(blk);
    sf.b(i) /= r(i);
  }

  double cn = 0.0;
  for (const auto& c : sf.C) cn = std::max(cn, c.cwiseAbs().maxCoeff());
  sf.obj_scale = std::max(1.0, cn);
  for (auto& c : sf.C) c /= sf.obj_scale;
  return sf;
}

// largest alpha in (0,1] with X + alpha*D psd, scaled by frac at the boundary
double max_step(const MatrixXcd& x, const MatrixXcd& d, double frac) {
  Eigen::LLT<MatrixXcd> llt(x);
  MatrixXcd xr = x;
  while (llt.info() != Eigen::Success) {
    xr.diagonal().array() += 1e-12 * (1.0 + xr.diagonal().real().maxCoeff());
    llt.compute(xr);
  }
  const auto l = llt.matrixL();
  MatrixXcd w = l.solve(d);
  w = l.solve(w.adjoint()).adjoint();
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(hsym(w), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= -1e-13) return 1.0;
  return std::min(1.0, -frac / lmin);
}

struct Iterate {
  std::vector<MatrixXcd> X, S;
  VectorXd y;
};

}  // namespace

MatrixXd embed_hermitian(const HMat& x) {
  if (x.rows() != x.cols())
    throw std::invalid_argument("embed_hermitian: matrix must be square");
  if ((x - x.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + x.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("embed_hermitian: matrix is not Hermitian");
  const int d = (int)x.rows();
  MatrixXd r(2 * d, 2 * d);
  r.topLeftCorner(d, d) = x.real();
  r.topRightCorner(d, d) = -x.imag();
  r.bottomLeftCorner(d, d) = x.imag();
  r.bottomRightCorner(d, d) = x.real();
  return r;
}

std::pair<VectorXcd, double> evd_rank1(const HMat& x) {
  const int d = (int)x.rows();
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(hsym(x));
  const VectorXd ev = es.eigenvalues();  // ascending
  const double l1 = ev(d - 1);
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  if (l1 <= 1e-14 * scale)
    return {VectorXcd::Zero(d), 0.0};
  VectorXcd v = std::sqrt(l1) * es.eigenvectors().col(d - 1);
  // fix the global phase: largest-magnitude entry real nonnegative
  int imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const std::complex<double> ph = v(imax) / std::abs(v(imax));
  v /= ph;
  const double l2 = (d > 1) ? std::max(0.0, ev(d - 2)) : 0.0;
  return {v, l2 / l1};
}

void SdpProblem::dump(std::ostream& os) const {
  os << "blocks " << psd_blocks.size() << "\n";
  for (const auto& [name, dim] : psd_blocks) os << "  " << name << " " << dim << "\n";
  os << "scalars " << num_scalars << "\n";
  os << "constraints " << constraints.size() << "\n";
  int ci = 0;
  for (const auto& c : constraints) {
    os << "constraint " << ci++ << " sense "
       << (c.sense == Sense::Eq ? "=" : (c.sense == Sense::Le ? "<=" : ">=")) << " rhs "
       << c.rhs << "\n";
    for (const auto& t : c.blocks) {
      for (int p = 0; p < t.coeff.rows(); ++p)
        for (int q = p; q < t.coeff.cols(); ++q)
          if (std::abs(t.coeff(p, q)) > 0.0)
            os << "  b" << t.block << " " << p << " " << q << " "
               << t.coeff(p, q).real() << " " << t.coeff(p, q).imag() << "\n";
    }
    for (const auto& t : c.scalars)
      os << "  s" << t.index << " " << t.coeff << "\n";
  }
}

namespace {

struct IpmReport {
  SolveStatus status = SolveStatus::NumericalFailure;
  int iterations = 0;
  double pres = 1.0, dres = 1.0, gap = 1.0;
  double merit() const { return std::max({pres, dres, gap}); }
};

// Core predictor-corrector loop on one standard form. Keeps the best
// iterate seen (by worst-of residuals) rather than the last one.
IpmReport run_ipm(const StdForm& sf, const SolverSettings& st, Iterate& best,
                  Iterate* last = nullptr) {
  const int m = (int)sf.rows.size();
  const int nb = (int)sf.dims.size();
  int ntot = 0;
  for (int d : sf.dims) ntot += d;
  const bool trace = std::getenv("ARIS_CONIC_TRACE") != nullptr;

  Iterate it;
  it.X.resize(nb);
  it.S.resize(nb);
  it.y = VectorXd::Zero(m);
  const double xi = std::max(10.0, std::sqrt((double)ntot));
  for (int b = 0; b < nb; ++b) {
    it.X[b] = xi * MatrixXcd::Identity(sf.dims[b], sf.dims[b]);
    it.S[b] = xi * MatrixXcd::Identity(sf.dims[b], sf.dims[b]);
  }
  IpmReport rep;
  best = it;
  if (m == 0) {
    rep.status = SolveStatus::Optimal;
    rep.pres = rep.dres = rep.gap = 0.0;
    return rep;
  }

  // constraints touching each block
  std::vector<std::vector<std::pair<int, const MatrixXcd*>>> touching(nb);
  for (int i = 0; i < m; ++i)
    for (const auto& [blk, a] : sf.rows[i]) touching[blk].emplace_back(i, &a);

  // thin eigen-expansions of the constraint matrices: most rows touching a
  // large block are low-rank (lifted quadratics, unit-modulus pins), and
  // running the Schur assembly through the factors instead of dense
  // congruences removes the m*n^3 bottleneck
  struct FactoredA {
    MatrixXcd Q;   // n x r eigenvectors
    VectorXd lam;  // r eigenvalues
    bool dense = true;
  };
  std::vector<std::vector<FactoredA>> fact(nb);
  for (int b = 0; b < nb; ++b) {
    const int n = sf.dims[b];
    fact[b].resize(touching[b].size());
    if (n < 32) continue;  // the dense path is already cheap
    for (size_t t = 0; t < touching[b].size(); ++t) {
      const MatrixXcd& a = *touching[b][t].second;
      // element pins carry a single diagonal entry; factor them by inspection
      {
        int nz_row = -1;
        bool single = true;
        for (int r = 0; r < n && single; ++r)
          for (int c2 = 0; c2 < n; ++c2)
            if (a(r, c2) != 0.0) {
              if (r != c2 || (nz_row >= 0 && nz_row != r)) {
                single = false;
                break;
              }
              nz_row = r;
            }
        if (single && nz_row >= 0) {
          FactoredA& f = fact[b][t];
          f.dense = false;
          f.Q = MatrixXcd::Zero(n, 1);
          f.Q(nz_row, 0) = 1.0;
          f.lam.resize(1);
          f.lam(0) = a(nz_row, nz_row).real();
          continue;
        }
      }
      Eigen::SelfAdjointEigenSolver<MatrixXcd> es(a);
      if (es.info() != Eigen::Success) continue;
      const double cut = 1e-13 * es.eigenvalues().cwiseAbs().maxCoeff();
      std::vector<int> keep;
      for (int r = 0; r < n; ++r)
        if (std::abs(es.eigenvalues()(r)) > cut) keep.push_back(r);
      if ((int)keep.size() > n / 3) continue;
      FactoredA& f = fact[b][t];
      f.dense = false;
      f.Q.resize(n, (int)keep.size());
      f.lam.resize((int)keep.size());
      for (int r = 0; r < (int)keep.size(); ++r) {
        f.Q.col(r) = es.eigenvectors().col(keep[r]);
        f.lam(r) = es.eigenvalues()(keep[r]);
      }
    }
  }

  const double bnorm = 1.0 + sf.b.norm();
  double cnorm = 1.0;
  for (const auto& c : sf.C) cnorm = std::max(cnorm, c.norm());

  double best_merit = std::numeric_limits<double>::infinity();
  std::vector<double> merit_hist;
  int tiny_steps = 0;
  for (int iter = 1; iter <= st.max_iter; ++iter) {
    VectorXd rp = sf.b;
    for (int i = 0; i < m; ++i)
      for (const auto& [blk, a] : sf.rows[i]) rp(i) -= re_trace_prod(a, it.X[blk]);
    std::vector<MatrixXcd> rd(nb);
    for (int b = 0; b < nb; ++b) rd[b] = sf.C[b] - it.S[b];
    for (int i = 0; i < m; ++i)
      for (const auto& [blk, a] : sf.rows[i]) rd[blk] -= it.y(i) * a;

    double gap_tr = 0.0;
    for (int b = 0; b < nb; ++b) gap_tr += re_trace_prod(it.X[b], it.S[b]);
    const double mu = gap_tr / ntot;

    double pobj = 0.0;
    for (int b = 0; b < nb; ++b) pobj += re_trace_prod(sf.C[b], it.X[b]);
    const double dobj = sf.b.dot(it.y);

    double rdn = 0.0;
    for (const auto& r : rd) rdn = std::max(rdn, r.norm());
    const double pres = rp.norm() / bnorm;
    const double dres = rdn / cnorm;
    const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    if (std::max({pres, dres, relgap}) < best_merit) {
      best_merit = std::max({pres, dres, relgap});
      best = it;
      rep.pres = pres;
      rep.dres = dres;
      rep.gap = relgap;
      rep.iterations = iter;
    }

    if (trace)
      std::fprintf(stderr,
                   "it %3d pres %.3e dres %.3e gap %.3e mu %.3e pobj %.6e dobj %.6e\n",
                   iter, pres, dres, relgap, mu, pobj, dobj);

    if (pres <= st.tol_feas && dres <= st.tol_feas && relgap <= st.tol_gap) {
      rep.status = SolveStatus::Optimal;
      if (last) *last = it;
      return rep;
    }

    // hand over to the next rescale phase once progress flattens out; the
    // best iterate so far is kept either way
    merit_hist.push_back(std::max({pres, dres, relgap}));
    if (iter > 15) {
      const double then = merit_hist[merit_hist.size() - 11];
      if (merit_hist.back() > 0.5 * then) break;
    }

    // primal infeasibility: dual objective diverging along a Farkas ray
    if (dobj > 1e4 * cnorm && it.y.norm() > 1e4) {
      const VectorXd yn = it.y / it.y.norm();
      std::vector<MatrixXcd> ray(nb);
      for (int b = 0; b < nb; ++b) ray[b] = MatrixXcd::Zero(sf.dims[b], sf.dims[b]);
      for (int i = 0; i < m; ++i)
        for (const auto& [blk, a] : sf.rows[i]) ray[blk] -= yn(i) * a;
      double lmin = 0.0;
      for (const auto& r : ray) {
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(r, Eigen::EigenvaluesOnly);
        lmin = std::min(lmin, es.eigenvalues().minCoeff());
      }
      if (sf.b.dot(yn) > 1e-8 && lmin > -1e-7) {
        rep.status = SolveStatus::Infeasible;
        if (last) *last = it;
        return rep;
      }
    }

    // factorizations
    std::vector<MatrixXcd> sinv(nb);
    bool fact_ok = true;
    for (int b = 0; b < nb; ++b) {
      Eigen::LLT<MatrixXcd> llt(it.S[b]);
      if (llt.info() != Eigen::Success) {
        fact_ok = false;
        break;
      }
      sinv[b] = llt.solve(MatrixXcd::Identity(sf.dims[b], sf.dims[b]));
      sinv[b] = hsym(sinv[b]);
    }
    if (!fact_ok) break;  // accept the best iterate if it qualifies

    // Schur complement M_ij = <A_i, X A_j S^{-1}>, symmetrized
    MatrixXd schur = MatrixXd::Zero(m, m);
    for (int b = 0; b < nb; ++b) {
      const auto& tb = touching[b];
      const auto& fb = fact[b];
      const int n = sf.dims[b];

      // factored entries: tr(q q^H X p p^H S^-1) = (q^H X p)(p^H S^-1 q)
      int R = 0;
      for (const auto& f : fb)
        if (!f.dense) R += (int)f.lam.size();
      if (R > 0) {
        MatrixXcd Q(n, R);
        VectorXd lam(R);
        std::vector<int> ent(R);
        int c = 0;
        for (size_t t = 0; t < fb.size(); ++t) {
          if (fb[t].dense) continue;
          for (int r = 0; r < fb[t].lam.size(); ++r, ++c) {
            Q.col(c) = fb[t].Q.col(r);
            lam(c) = fb[t].lam(r);
            ent[c] = tb[t].first;
          }
        }
        const MatrixXcd U = it.X[b] * Q;
        const MatrixXcd V = sinv[b] * Q;
        const MatrixXcd G1 = Q.adjoint() * U;
        const MatrixXcd G2 = Q.adjoint() * V;
        for (int s = 0; s < R; ++s)
          for (int r = 0; r < R; ++r)
            schur(ent[s], ent[r]) +=
                lam(s) * lam(r) * (G1(s, r) * std::conj(G2(s, r))).real();
        // dense rows against factored columns; both orders coincide because
        // tr(A X q q^H S^-1) = conj(tr(q q^H X A S^-1)) for Hermitian A
        for (size_t t = 0; t < fb.size(); ++t) {
          if (!fb[t].dense) continue;
          const MatrixXcd W = (*tb[t].second) * V;
          for (int s = 0; s < R; ++s) {
            const double val = lam(s) * U.col(s).dot(W.col(s)).real();
            schur(ent[s], tb[t].first) += val;
            schur(tb[t].first, ent[s]) += val;
          }
        }
      }

      // dense-dense pairs keep the direct congruence
      for (size_t j = 0; j < tb.size(); ++j) {
        if (!fb[j].dense) continue;
        const MatrixXcd bj = it.X[b] * (*tb[j].second) * sinv[b];
        for (size_t i = 0; i < tb.size(); ++i)
          if (fb[i].dense)
            schur(tb[i].first, tb[j].first) += re_trace_prod(*tb[i].second, bj);
      }
    }
    schur = 0.5 * (schur + schur.transpose()).eval();
    schur.diagonal().array() += 1e-13 * (1.0 + schur.diagonal().maxCoeff());
    Eigen::LDLT<MatrixXd> mfact(schur);

    auto solve_direction = [&](double sigmu, const std::vector<MatrixXcd>* corr_xs)
        -> std::tuple<std::vector<MatrixXcd>, std::vector<MatrixXcd>, VectorXd> {
      std::vector<MatrixXcd> xr(nb);
      for (int b = 0; b < nb; ++b) {
        xr[b] = it.X[b] * rd[b] * sinv[b];
        if (corr_xs) xr[b] += (*corr_xs)[b] * sinv[b];
      }
      VectorXd rhs(m);
      for (int i = 0; i < m; ++i) {
        double g = sf.b(i);
        for (const auto& [blk, a] : sf.rows[i]) {
          g -= sigmu * re_trace_prod(a, sinv[blk]);
          g += re_trace_prod(a, xr[blk]);
        }
        rhs(i) = g;
      }
      VectorXd dy = mfact.solve(rhs);
      // one step of iterative refinement keeps the primal residual from
      // flooring when the Schur complement is badly conditioned
      dy += mfact.solve(rhs - schur * dy);
      std::vector<MatrixXcd> ds(nb), dx(nb);
      for (int b = 0; b < nb; ++b) ds[b] = rd[b];
      for (int i = 0; i < m; ++i)
        for (const auto& [blk, a] : sf.rows[i]) ds[blk] -= dy(i) * a;
      for (int b = 0; b < nb; ++b) {
        MatrixXcd u = sigmu * sinv[b] - it.X[b] - it.X[b] * ds[b] * sinv[b];
        if (corr_xs) u -= (*corr_xs)[b] * sinv[b];
        dx[b] = hsym(u);
      }
      return {dx, ds, dy};
    };

    // predictor
    auto [dxa, dsa, dya] = solve_direction(0.0, nullptr);
    double apa = 1.0, ada = 1.0;
    for (int b = 0; b < nb; ++b) {
      apa = std::min(apa, max_step(it.X[b], dxa[b], st.step_frac));
      ada = std::min(ada, max_step(it.S[b], dsa[b], st.step_frac));
    }
    double mu_aff = 0.0;
    for (int b = 0; b < nb; ++b)
      mu_aff += re_trace_prod(it.X[b] + apa * dxa[b], it.S[b] + ada * dsa[b]);
    mu_aff = std::max(0.0, mu_aff / ntot);
    double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 1e-10, 1.0);
    // do not let complementarity collapse far below the primal residual:
    // the Schur system loses the digits needed to keep reducing it
    if (mu < 1e-2 * pres) sigma = std::max(sigma, 0.5);

    // corrector with second-order term
    std::vector<MatrixXcd> corr(nb);
    for (int b = 0; b < nb; ++b) corr[b] = dxa[b] * dsa[b];
    auto [dx, ds, dy] = solve_direction(sigma * mu, &corr);

    double ap = 1.0, ad = 1.0;
    for (int b = 0; b < nb; ++b) {
      ap = std::min(ap, max_step(it.X[b], dx[b], st.step_frac));
      ad = std::min(ad, max_step(it.S[b], ds[b], st.step_frac));
    }

    if (trace)
      std::fprintf(stderr, "   sigma %.2e ap %.3e ad %.3e\n", sigma, ap, ad);

    for (int b = 0; b < nb; ++b) {
      it.X[b] = hsym(it.X[b] + ap * dx[b]);
      it.S[b] = hsym(it.S[b] + ad * ds[b]);
    }
    it.y += ad * dy;

    if (ap < 1e-4 && ad < 1e-4)
      ++tiny_steps;
    else
      tiny_steps = 0;
    if (tiny_steps >= 3) break;
  }
  if (last) *last = it;
  rep.status = (rep.pres <= st.accept_feas && rep.dres <= st.accept_feas &&
                rep.gap <= st.accept_gap)
                   ? SolveStatus::Optimal
                   : SolveStatus::NumericalFailure;
  return rep;
}

SdpSolution extract(const StdForm& sf, const Iterate& it, const IpmReport& rep) {
  SdpSolution out;
  out.status = rep.status;
  out.iterations = rep.iterations;
  out.primal_residual = rep.pres;
  out.dual_residual = rep.dres;
  out.gap = rep.gap;
  out.blocks.resize(sf.num_named_blocks);
  for (int b = 0; b < sf.num_named_blocks; ++b)
    out.blocks[b] = sf.var_scale[b] * it.X[b];
  out.scalars.resize(sf.num_scalars);
  for (int j = 0; j < sf.num_scalars; ++j)
    out.scalars(j) = sf.var_scale[sf.num_named_blocks + j] *
                     it.X[sf.num_named_blocks + j](0, 0).real();
  double obj = 0.0;
  for (size_t b = 0; b < sf.C.size(); ++b) obj += re_trace_prod(sf.C[b], it.X[b]);
  out.objective = obj * sf.obj_scale;
  return out;
}

}  // namespace

SdpSolution solve(const SdpProblem& p, const SolverSettings& st) {
  StdForm sf = to_standard_form(p);
  Iterate best_it;
  IpmReport best_rep = run_ipm(sf, st, best_it);
  StdForm best_sf = sf;
  if (best_rep.status == SolveStatus::Infeasible ||
      (best_rep.status == SolveStatus::Optimal && best_rep.merit() <= st.accept_feas))
    return extract(sf, best_it, best_rep);

  // Refinement phases: rescale every block by the magnitude the previous
  // phase found for it, so the re-solve works on better-scaled variables.
  // Equilibration alone cannot see the solution scales.
  StdForm cur = sf;
  Iterate prev_it = best_it;
  const int nblk = (int)sf.dims.size();
  for (int phase = 0; phase < 2; ++phase) {
    StdForm next = cur;
    for (int b = 0; b < nblk; ++b) {
      const double t = prev_it.X[b].trace().real() / cur.dims[b];
      const double nu = std::clamp(t, 1e-10, 1e10);
      next.var_scale[b] *= nu;
      next.C[b] *= nu;
      for (auto& row : next.rows)
        for (auto& [blk, a] : row)
          if (blk == b) a *= nu;
    }
    // re-normalize rows after the variable rescale
    for (int i = 0; i < (int)next.rows.size(); ++i) {
      double mx = 0.0;
      for (const auto& [blk, a] : next.rows[i]) mx = std::max(mx, a.norm());
      const double d = 1.0 / std::clamp(mx, 1e-12, 1e12);
      for (auto& [blk, a] : next.rows[i]) a *= d;
      next.b(i) *= d;
    }
    double cn = 0.0;
    for (const auto& c : next.C) cn = std::max(cn, c.cwiseAbs().maxCoeff());
    const double extra = std::max(1.0, cn);
    for (auto& c : next.C) c /= extra;
    next.obj_scale *= extra;

    Iterate it;
    IpmReport rep = run_ipm(next, st, it);
    if (rep.status == SolveStatus::Infeasible) return extract(next, it, rep);
    if (rep.merit() < best_rep.merit()) {
      best_rep = rep;
      best_it = it;
      best_sf = next;
    }
    if (best_rep.status == SolveStatus::Optimal && best_rep.merit() <= st.accept_feas)
      break;
    cur = next;
    prev_it = it;
  }
  if (best_rep.status == SolveStatus::NumericalFailure &&
      best_rep.pres <= st.salvage_feas && best_rep.dres <= st.salvage_feas &&
      best_rep.gap <= st.salvage_gap)
    best_rep.status = SolveStatus::Optimal;
  return extract(best_sf, best_it, best_rep);
}

}  // namespace aris::conic
