#include "aris/bf_stage.hpp"

#include "aris/eh.hpp"

#include <doctest.h>

#include <random>

using namespace aris;
using Cplx = std::complex<double>;

namespace {

// Single-user, no-RIS instance with a hand-placed direct channel on the
// realistic ~mW/µW power scale.
struct SingleUser {
  Scenario scn;
  ChannelSet ch;

  SingleUser() : scn(Scenario::defaults(2, 1, 0)) {
    ch.G = Eigen::MatrixXcd::Zero(0, 2);
    ch.h_r = {Eigen::VectorXcd::Zero(0)};
    ch.h_b = {Eigen::VectorXcd(2)};
    ch.h_b[0] << Cplx(1e-3, 5e-4), Cplx(-3e-4, 2e-4);
  }

  // Grid-and-polish oracle: at K = 1 the beamformer is MRT and the problem
  // collapses to P(rho) = max(gamma (sigma2 + delta2/rho), R/(1-rho)) / ||h||^2.
  double oracle() const {
    const double h2 = ch.h_b[0].squaredNorm();
    const double r_w =
        1e-3 * EhModel(scn.eh_a, scn.eh_b, scn.eh_c).required_input(scn.e_mw[0]) /
        scn.eta[0];
    auto pw = [&](double rho) {
      return std::max(scn.gamma[0] * (scn.sigma2[0] + scn.delta2[0] / rho),
                      r_w / (1.0 - rho)) /
             h2;
    };
    double lo = scn.rho_min, hi = 1.0 - scn.rho_min;
    double best = std::min(pw(lo), pw(hi));
    for (int pass = 0; pass < 6; ++pass) {
      const int grid = 2000;
      double arg = lo;
      for (int i = 0; i <= grid; ++i) {
        const double rho = lo + (hi - lo) * i / grid;
        const double p = pw(rho);
        if (p < best) {
          best = p;
          arg = rho;
        }
      }
      const double span = (hi - lo) / grid;
      lo = std::max(scn.rho_min, arg - 2 * span);
      hi = std::min(1.0 - scn.rho_min, arg + 2 * span);
    }
    return best;
  }
};

}  // namespace

TEST_CASE("P3 single user matches the scalar oracle") {
  SingleUser su;
  const double want = su.oracle();
  const P3Result r = solve_p3(su.ch, RisVector::off(0), su.scn);
  REQUIRE(r.status == conic::SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(want).epsilon(5e-3));
  CHECK(r.rank_residual[0] <= 1e-6);

  // MRT: extracted beamformer collinear with the channel
  const double cosang =
      std::abs(su.ch.h_b[0].dot(r.w[0])) / (su.ch.h_b[0].norm() * r.w[0].norm());
  CHECK(cosang == doctest::Approx(1.0).epsilon(1e-4));

  // the returned solution satisfies the raw constraints
  BfSolution sol{r.w, r.rho};
  const Audit a = audit_solution(su.ch, RisVector::off(0), sol, su.scn, false);
  CHECK(a.ok);
}

TEST_CASE("P3 without an EH target reduces to the SINR corner") {
  SingleUser su;
  su.scn.e_mw = {0.0};
  // with no EH constraint the optimum pushes rho to its upper bound
  const double h2 = su.ch.h_b[0].squaredNorm();
  const double want =
      su.scn.gamma[0] *
      (su.scn.sigma2[0] + su.scn.delta2[0] / (1.0 - su.scn.rho_min)) / h2;
  const P3Result r = solve_p3(su.ch, RisVector::off(0), su.scn);
  CHECK(r.objective == doctest::Approx(want).epsilon(5e-3));
}

TEST_CASE("P3 objective scales with the noise floor") {
  SingleUser su;
  su.scn.e_mw = {0.0};
  const double base = solve_p3(su.ch, RisVector::off(0), su.scn).objective;
  su.scn.sigma2[0] *= 4.0;
  su.scn.delta2[0] *= 4.0;
  const double scaled = solve_p3(su.ch, RisVector::off(0), su.scn).objective;
  CHECK(scaled == doctest::Approx(4.0 * base).epsilon(5e-3));
}

TEST_CASE("P3 honors frozen PS ratios") {
  SingleUser su;
  const std::vector<double> rho_fix = {0.35};
  StageOptions opt;
  opt.fixed_rho = &rho_fix;
  const P3Result fixed = solve_p3(su.ch, RisVector::off(0), su.scn, opt);
  CHECK(fixed.rho[0] == doctest::Approx(0.35));
  const P3Result free = solve_p3(su.ch, RisVector::off(0), su.scn);
  // optimizing rho can only help
  CHECK(free.objective <= fixed.objective * (1.0 + 1e-6));

  BfSolution sol{fixed.w, fixed.rho};
  CHECK(audit_solution(su.ch, RisVector::off(0), sol, su.scn, false).ok);
}

TEST_CASE("P3 problem layout at K = 1") {
  SingleUser su;
  const conic::SdpProblem p = build_p3(su.ch, RisVector::off(0), su.scn);
  // W0 plus the two 2x2 epigraph blocks
  REQUIRE(p.psd_blocks.size() == 3);
  CHECK(p.psd_blocks[0].second == 2);
  CHECK(p.psd_blocks[1].second == 2);
  CHECK(p.psd_blocks[2].second == 2);
  CHECK(p.num_scalars == 1);  // rho
  // SINR + EH + 2x3 epigraph pins + 2 rho bounds
  CHECK(p.constraints.size() == 10);
}

TEST_CASE("P3 reports infeasibility on a dead channel") {
  SingleUser su;
  su.ch.h_b[0].setZero();
  CHECK_THROWS_AS(solve_p3(su.ch, RisVector::off(0), su.scn), P3InfeasibleError);
}

TEST_CASE("P3 rejects a RIS whose own noise exceeds the budget") {
  Scenario scn = Scenario::defaults(2, 1, 4);
  scn.sigma2_v = 1.0;  // 1 W of dynamic noise per unit gain
  scn.p_max = 0.01;
  const ChannelSet ch = gen_channels(scn, 1);
  RisVector theta{Eigen::VectorXcd::Ones(4)};
  CHECK_THROWS_AS(solve_p3(ch, theta, scn), P3InfeasibleError);
}

TEST_CASE("P3 on generated channels with an active RIS") {
  Scenario scn = Scenario::defaults(4, 2, 6);
  const ChannelSet ch = gen_channels(scn, 17);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ph(0.0, 2 * M_PI);
  RisVector theta{Eigen::VectorXcd(6)};
  for (int n = 0; n < 6; ++n) theta.v(n) = std::polar(2.0, ph(rng));

  const P3Result r = solve_p3(ch, theta, scn);
  REQUIRE(r.status == conic::SolveStatus::Optimal);
  CHECK(r.objective > 0.0);
  for (double resid : r.rank_residual) CHECK(resid <= 1e-6);

  BfSolution sol{r.w, r.rho};
  const Audit a = audit_solution(ch, theta, sol, scn);
  CHECK(a.ok);
  CHECK(reflect_power(ch, theta, sol, scn) <= scn.p_max * (1.0 + 1e-6));
  // the budget should bind or at least never be exceeded
  CHECK(a.reflect_slack >= -1e-6);
}
