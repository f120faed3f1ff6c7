#include "aris/conic.hpp"

#include <doctest.h>

#include <random>

using namespace aris::conic;
using Cplx = std::complex<double>;

TEST_CASE("embed_hermitian layout and spectrum") {
  HMat x(2, 2);
  x << Cplx(2, 0), Cplx(0, 1), Cplx(0, -1), Cplx(2, 0);
  const Eigen::MatrixXd r = embed_hermitian(x);
  REQUIRE(r.rows() == 4);
  Eigen::MatrixXd want(4, 4);
  want << 2, 0, 0, -1,
          0, 2, 1, 0,
          0, 1, 2, 0,
         -1, 0, 0, 2;
  CHECK((r - want).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(r.trace() == doctest::Approx(2.0 * x.real().trace()));

  // eigenvalues of x (1 and 3) each appear twice
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
  CHECK(es.eigenvalues()(0) == doctest::Approx(1.0));
  CHECK(es.eigenvalues()(1) == doctest::Approx(1.0));
  CHECK(es.eigenvalues()(2) == doctest::Approx(3.0));
  CHECK(es.eigenvalues()(3) == doctest::Approx(3.0));

  HMat bad(2, 2);
  bad << 1.0, Cplx(1, 1), Cplx(1, 1), 1.0;  // not Hermitian
  CHECK_THROWS_AS(embed_hermitian(bad), std::invalid_argument);
  CHECK_THROWS_AS(embed_hermitian(HMat::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("evd_rank1 recovers a rank-one factor") {
  Eigen::VectorXcd v(3);
  v << Cplx(1, 2), Cplx(0, -1), Cplx(3, 0);
  const HMat x = v * v.adjoint();
  auto [u, resid] = evd_rank1(x);
  CHECK(resid <= 1e-12);
  CHECK((u * u.adjoint() - x).cwiseAbs().maxCoeff() < 1e-10);
  // phase convention: largest-magnitude entry real nonnegative
  int imax = 0;
  u.cwiseAbs().maxCoeff(&imax);
  CHECK(u(imax).imag() == doctest::Approx(0.0));
  CHECK(u(imax).real() >= 0.0);

  auto [z, zr] = evd_rank1(HMat::Zero(3, 3));
  CHECK(z.norm() == 0.0);
  CHECK(zr == 0.0);

  // genuinely rank-2 input reports a large residual
  Eigen::VectorXcd w(3);
  w << 0.0, 1.0, Cplx(0, 1);
  auto [u2, r2] = evd_rank1(v * v.adjoint() + 5.0 * w * w.adjoint());
  CHECK(r2 > 0.1);
}

TEST_CASE("solve: trace-normalized toy problems") {
  SUBCASE("min tr X s.t. tr X >= 1") {
    SdpProblem p;
    const int b = p.add_block("X", 2);
    p.objective_blocks.push_back({b, HMat::Identity(2, 2)});
    Constraint c;
    c.blocks.push_back({b, HMat::Identity(2, 2)});
    c.sense = Sense::Ge;
    c.rhs = 1.0;
    p.constraints.push_back(c);
    const SdpSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.objective == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(s.blocks[0].trace().real() == doctest::Approx(1.0).epsilon(1e-6));
  }

  SUBCASE("weighted objective picks the cheap eigendirection") {
    SdpProblem p;
    const int b = p.add_block("X", 2);
    HMat w = HMat::Zero(2, 2);
    w(0, 0) = 1.0;
    w(1, 1) = 2.0;
    p.objective_blocks.push_back({b, w});
    Constraint c;
    c.blocks.push_back({b, HMat::Identity(2, 2)});
    c.sense = Sense::Eq;
    c.rhs = 1.0;
    p.constraints.push_back(c);
    const SdpSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.objective == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(s.blocks[0](0, 0)) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(std::abs(s.blocks[0](1, 1)) == doctest::Approx(0.0).epsilon(1e-5));
  }

  SUBCASE("contradictory constraints are reported infeasible") {
    SdpProblem p;
    const int b = p.add_block("X", 2);
    p.objective_blocks.push_back({b, HMat::Identity(2, 2)});
    Constraint c1;
    c1.blocks.push_back({b, HMat::Identity(2, 2)});
    c1.sense = Sense::Ge;
    c1.rhs = 2.0;
    Constraint c2;
    c2.blocks.push_back({b, HMat::Identity(2, 2)});
    c2.sense = Sense::Le;
    c2.rhs = 1.0;
    p.constraints = {c1, c2};
    CHECK(solve(p).status == SolveStatus::Infeasible);
  }

  SUBCASE("PSD cone itself can force infeasibility") {
    SdpProblem p;
    const int b = p.add_block("X", 2);
    p.objective_blocks.push_back({b, HMat::Identity(2, 2)});
    Constraint c;
    c.blocks.push_back({b, HMat::Identity(2, 2)});
    c.sense = Sense::Le;
    c.rhs = -1.0;  // tr X <= -1 with X PSD
    p.constraints.push_back(c);
    CHECK(solve(p).status == SolveStatus::Infeasible);
  }
}

TEST_CASE("solve: nonnegative scalars (LP corner)") {
  // min s0 + 2 s1 s.t. s0 + s1 >= 3, s1 <= 1  ->  s = (2, 1)? no:
  // putting weight on s0 is cheaper, optimum s0 = 3, s1 = 0, objective 3.
  SdpProblem p;
  const int s0 = p.add_scalar();
  const int s1 = p.add_scalar();
  p.objective_scalars = {{s0, 1.0}, {s1, 2.0}};
  Constraint c1;
  c1.scalars = {{s0, 1.0}, {s1, 1.0}};
  c1.sense = Sense::Ge;
  c1.rhs = 3.0;
  Constraint c2;
  c2.scalars = {{s1, 1.0}};
  c2.sense = Sense::Le;
  c2.rhs = 1.0;
  p.constraints = {c1, c2};
  const SdpSolution s = solve(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(s.scalars(0) == doctest::Approx(3.0).epsilon(1e-5));
  CHECK(s.scalars(1) == doctest::Approx(0.0).epsilon(1e-5));
}

TEST_CASE("solve: complex data exercises the full Hermitian path") {
  // min <A, X> s.t. tr X = 1 with A = I - u u^H for a complex unit u.
  // Optimum puts all mass on u: objective 0, X = u u^H.
  Eigen::VectorXcd u(3);
  u << Cplx(1, 1), Cplx(0, -2), Cplx(2, 0);
  u.normalize();
  SdpProblem p;
  const int b = p.add_block("X", 3);
  p.objective_blocks.push_back({b, HMat::Identity(3, 3) - u * u.adjoint()});
  Constraint c;
  c.blocks.push_back({b, HMat::Identity(3, 3)});
  c.sense = Sense::Eq;
  c.rhs = 1.0;
  p.constraints.push_back(c);
  const SdpSolution s = solve(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(0.0).epsilon(1e-6));
  auto [v, resid] = evd_rank1(s.blocks[0]);
  CHECK(resid < 1e-5);
  CHECK(std::abs(std::abs(u.dot(v)) - v.norm()) < 1e-4);
}

TEST_CASE("solve agrees with its own real embedding") {
  // random feasible Hermitian SDP solved twice: natively and through
  // embed_hermitian / real coefficients; objectives must match (factor 2
  // in the embedded trace handled by halving the coefficients).
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd;
  auto randh = [&](int d) {
    HMat a(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a(i, j) = Cplx(nd(rng), nd(rng));
    return HMat(0.5 * (a + a.adjoint()));
  };

  for (int trial = 0; trial < 5; ++trial) {
    const int d = 3;
    const HMat c0 = randh(d) + 4.0 * HMat::Identity(d, d);  // keep it bounded below
    const HMat a1 = randh(d);

    SdpProblem p;
    const int b = p.add_block("X", d);
    p.objective_blocks.push_back({b, c0});
    Constraint c;
    c.blocks.push_back({b, HMat::Identity(d, d)});
    c.sense = Sense::Eq;
    c.rhs = 1.0;
    Constraint c2;
    c2.blocks.push_back({b, a1});
    c2.sense = Sense::Le;
    c2.rhs = 0.3;
    p.constraints = {c, c2};
    const SdpSolution native = solve(p);
    REQUIRE(native.status == SolveStatus::Optimal);

    SdpProblem q;
    const int br = q.add_block("Xr", 2 * d);
    q.objective_blocks.push_back({br, 0.5 * embed_hermitian(c0).cast<Cplx>()});
    Constraint cr;
    cr.blocks.push_back({br, 0.5 * embed_hermitian(HMat::Identity(d, d)).cast<Cplx>()});
    cr.sense = Sense::Eq;
    cr.rhs = 1.0;
    Constraint cr2;
    cr2.blocks.push_back({br, 0.5 * embed_hermitian(a1).cast<Cplx>()});
    cr2.sense = Sense::Le;
    cr2.rhs = 0.3;
    q.constraints = {cr, cr2};
    const SdpSolution embedded = solve(q);
    REQUIRE(embedded.status == SolveStatus::Optimal);

    CHECK(native.objective ==
          doctest::Approx(embedded.objective).epsilon(1e-5));
  }
}

TEST_CASE("solve: reported residuals honor the acceptance contract") {
  SdpProblem p;
  const int b = p.add_block("X", 4);
  p.objective_blocks.push_back({b, HMat::Identity(4, 4)});
  Constraint c;
  HMat a = HMat::Zero(4, 4);
  a(0, 0) = 1.0;
  a(1, 1) = 2.0;
  a(0, 1) = Cplx(0, 0.5);
  a(1, 0) = Cplx(0, -0.5);
  c.blocks.push_back({b, a});
  c.sense = Sense::Ge;
  c.rhs = 1.0;
  p.constraints.push_back(c);
  const SdpSolution s = solve(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.primal_residual <= 1e-7);
  CHECK(s.dual_residual <= 1e-7);
  CHECK(s.gap <= 1e-7);
  // solution block is PSD up to roundoff
  Eigen::SelfAdjointEigenSolver<HMat> es(s.blocks[0]);
  CHECK(es.eigenvalues()(0) >= -1e-9);
}
