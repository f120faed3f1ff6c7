#include "aris/metrics.hpp"

#include "aris/eh.hpp"

#include <limits>
#include <stdexcept>

namespace aris {

namespace {

void check_dims(const ChannelSet& ch, const RisVector& theta, int k) {
  if (k < 0 || k >= (int)ch.h_b.size())
    throw std::invalid_argument("metrics: user index out of range");
  if (theta.v.size() != ch.G.rows() || ch.h_r[k].size() != ch.G.rows())
    throw std::invalid_argument("metrics: RIS dimension mismatch");
}

// sigma_v^2 sum_n |h_r[n]|^2 |theta[n]|^2 at user k, W
double ris_noise_at_user(const ChannelSet& ch, const RisVector& theta,
                         const Scenario& scn, int k) {
  double acc = 0.0;
  for (int n = 0; n < theta.v.size(); ++n)
    acc += std::norm(ch.h_r[k](n)) * std::norm(theta.v(n));
  return scn.sigma2_v * acc;
}

}  // namespace

Eigen::VectorXcd effective_channel(const ChannelSet& ch, const RisVector& theta, int k) {
  check_dims(ch, theta, k);
  Eigen::VectorXcd h = ch.h_b[k];
  if (theta.v.size() > 0)
    h += ch.G.adjoint() * theta.v.conjugate().cwiseProduct(ch.h_r[k]);
  return h;
}

double sinr(const ChannelSet& ch, const RisVector& theta, const BfSolution& sol,
            const Scenario& scn, int k) {
  if (sol.rho[k] <= 0.0 || sol.rho[k] >= 1.0)
    throw std::domain_error("sinr: rho must lie in (0,1)");
  const Eigen::VectorXcd h = effective_channel(ch, theta, k);
  const double sig = std::norm(h.dot(sol.w[k]));
  double interf = 0.0;
  for (int i = 0; i < scn.K; ++i)
    if (i != k) interf += std::norm(h.dot(sol.w[i]));
  const double den = interf + ris_noise_at_user(ch, theta, scn, k) + scn.sigma2[k] +
                     scn.delta2[k] / sol.rho[k];
  return sig / den;
}

double harvested_mw(const ChannelSet& ch, const RisVector& theta, const BfSolution& sol,
                    const Scenario& scn, int k) {
  const Eigen::VectorXcd h = effective_channel(ch, theta, k);
  double p = 0.0;
  for (int i = 0; i < scn.K; ++i) p += std::norm(h.dot(sol.w[i]));
  p += ris_noise_at_user(ch, theta, scn, k);
  const double p_in_w = scn.eta[k] * (1.0 - sol.rho[k]) * p;
  EhModel eh(scn.eh_a, scn.eh_b, scn.eh_c);
  return eh.harvest(1e3 * p_in_w);
}

double reflect_power(const ChannelSet& ch, const RisVector& theta, const BfSolution& sol,
                     const Scenario& scn) {
  const int n_ris = (int)theta.v.size();
  if (n_ris == 0) return 0.0;
  double acc = 0.0;
  for (int i = 0; i < scn.K; ++i) {
    const Eigen::VectorXcd gw = ch.G * sol.w[i];
    for (int n = 0; n < n_ris; ++n)
      acc += std::norm(theta.v(n)) * std::norm(gw(n));
  }
  acc += scn.sigma2_v * theta.v.squaredNorm();
  return acc;
}

double bs_power(const BfSolution& sol) {
  double acc = 0.0;
  for (const auto& w : sol.w) acc += w.squaredNorm();
  return acc;
}

double total_power(const ChannelSet& ch, const RisVector& theta, const BfSolution& sol,
                   const Scenario& scn) {
  return bs_power(sol) + reflect_power(ch, theta, sol, scn);
}

Audit audit_solution(const ChannelSet& ch, const RisVector& theta, const BfSolution& sol,
                     const Scenario& scn, bool check_reflect) {
  Audit a;
  a.ok = true;
  a.sinr_margin.resize(scn.K);
  a.eh_margin.resize(scn.K);
  for (int k = 0; k < scn.K; ++k) {
    const double s = sinr(ch, theta, sol, scn, k);
    a.sinr_margin[k] = s / scn.gamma[k] - 1.0;
    if (s < scn.gamma[k] * (1.0 - 1e-4)) a.ok = false;

    const double h = harvested_mw(ch, theta, sol, scn, k);
    if (scn.e_mw[k] > 0.0) {
      a.eh_margin[k] = h / scn.e_mw[k] - 1.0;
      if (h < scn.e_mw[k] * (1.0 - 1e-4)) a.ok = false;
    } else {
      a.eh_margin[k] = std::numeric_limits<double>::infinity();
    }
  }
  if (check_reflect) {
    const double r = reflect_power(ch, theta, sol, scn);
    a.reflect_slack = 1.0 - r / scn.p_max;
    if (r > scn.p_max * (1.0 + 1e-6)) a.ok = false;
  } else {
    a.reflect_slack = 1.0;
  }
  return a;
}

}  // namespace aris
