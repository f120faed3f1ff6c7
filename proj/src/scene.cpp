#include "aris/scene.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace aris {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("Scenario: " + what);
}

using Cplx = std::complex<double>;

// Half-wavelength ULA steering vector toward direction angle phi,
// array axis along x.
Eigen::VectorXcd steering(int n, double phi) {
  Eigen::VectorXcd a(n);
  const double s = std::cos(phi);
  for (int i = 0; i < n; ++i)
    a(i) = std::polar(1.0, M_PI * i * s);
  return a;
}

double angle_from_to(const Vec2& a, const Vec2& b) {
  return std::atan2(b.y - a.y, b.x - a.x);
}

struct Randn {
  std::mt19937_64 rng;
  std::normal_distribution<double> nd{0.0, 1.0};
  explicit Randn(std::uint64_t seed) : rng(seed) {}
  Cplx cn() {  // CN(0,1)
    const double re = nd(rng);
    const double im = nd(rng);
    return Cplx(re, im) / std::sqrt(2.0);
  }
  double uni() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
};

}  // namespace

void Scenario::validate() const {
  require(M >= 1, "M must be >= 1");
  require(K >= 1, "K must be >= 1");
  require(N >= 0, "N must be >= 0");
  require((int)gamma.size() == K, "gamma must have K entries");
  require((int)e_mw.size() == K, "e must have K entries");
  require((int)eta.size() == K, "eta must have K entries");
  require((int)sigma2.size() == K, "sigma2 must have K entries");
  require((int)delta2.size() == K, "delta2 must have K entries");
  for (int k = 0; k < K; ++k) {
    require(gamma[k] > 0.0, "gamma must be positive");
    require(e_mw[k] >= 0.0, "e must be nonnegative");
    require(eta[k] > 0.0 && eta[k] <= 1.0, "eta must lie in (0,1]");
    require(sigma2[k] > 0.0, "sigma2 must be positive");
    require(delta2[k] > 0.0, "delta2 must be positive");
  }
  require(p_max > 0.0, "p_max must be positive");
  require(sigma2_v > 0.0, "sigma2_v must be positive");
  require(eh_a > 0.0 && eh_b > 0.0 && eh_c > 0.0, "EH coefficients must be positive");
  require(mu > 0.0, "mu must be positive");
  require(alpha > 0.0, "alpha must be positive");
  require(beta > 0.0, "beta must be positive");
  require(zeta > 0.0 && zeta < 1.0, "zeta must lie in (0,1)");
  require(cluster_radius > 0.0, "cluster_radius must be positive");
  require(D0 > 0.0, "D0 must be positive");
  require(rho_min > 0.0 && rho_min < 0.5, "rho_min must lie in (0, 0.5)");
}

Scenario Scenario::defaults(int M, int K, int N) {
  Scenario s;
  s.M = M;
  s.K = K;
  s.N = N;
  s.gamma.assign(K, db_to_lin(10.0));
  s.e_mw.assign(K, 1e3 * dbm_to_w(-20.0));  // -20 dBm in mW
  s.eta.assign(K, 1.0);
  s.p_max = 10e-3;
  s.sigma2.assign(K, dbm_to_w(-70.0));
  s.delta2.assign(K, dbm_to_w(-50.0));
  s.sigma2_v = dbm_to_w(-70.0);
  s.eh_a = 2.463;
  s.eh_b = 1.635;
  s.eh_c = 0.826;
  s.mu = 5e-5;
  s.alpha = 1.0;
  s.beta = 1.0;
  s.zeta = 1e-3;
  s.rician_K_dB = 10.0;
  s.bs_pos = {3.5, 0.0};
  s.ris_pos = {0.0, 8.0};
  s.cluster_center = {3.5, 8.0};
  s.cluster_radius = 2.5;
  s.kappa_direct = 3.0;
  s.kappa_reflect = 2.2;
  s.C0_dB = -30.0;
  s.D0 = 1.0;
  return s;
}

double pathloss(double d, double kappa, double C0_dB, double D0) {
  if (d <= 0.0) throw std::domain_error("pathloss: d must be positive");
  if (D0 <= 0.0) throw std::domain_error("pathloss: D0 must be positive");
  return db_to_lin(C0_dB) * std::pow(d / D0, -kappa);
}

ChannelSet gen_channels(const Scenario& scn, std::uint64_t seed) {
  scn.validate();
  Randn rnd(seed);

  // user positions, uniform in the cluster disk
  std::vector<Vec2> users(scn.K);
  for (int k = 0; k < scn.K; ++k) {
    const double r = scn.cluster_radius * std::sqrt(rnd.uni());
    const double phi = 2.0 * M_PI * rnd.uni();
    users[k] = {scn.cluster_center.x + r * std::cos(phi),
                scn.cluster_center.y + r * std::sin(phi)};
  }

  const double kR = db_to_lin(scn.rician_K_dB);
  const double w_los = std::sqrt(kR / (1.0 + kR));
  const double w_nlos = std::sqrt(1.0 / (1.0 + kR));

  ChannelSet ch;
  ch.G.resize(scn.N, scn.M);
  ch.h_r.resize(scn.K);
  ch.h_b.resize(scn.K);

  // BS -> RIS
  if (scn.N > 0) {
    const double g = std::sqrt(
        pathloss(dist(scn.bs_pos, scn.ris_pos), scn.kappa_reflect, scn.C0_dB, scn.D0));
    const Eigen::VectorXcd a_r = steering(scn.N, angle_from_to(scn.ris_pos, scn.bs_pos));
    const Eigen::VectorXcd a_b = steering(scn.M, angle_from_to(scn.bs_pos, scn.ris_pos));
    const Eigen::MatrixXcd los = a_r * a_b.adjoint();
    for (int i = 0; i < scn.N; ++i)
      for (int j = 0; j < scn.M; ++j)
        ch.G(i, j) = g * (w_los * los(i, j) + w_nlos * rnd.cn());
  }

  for (int k = 0; k < scn.K; ++k) {
    // RIS -> user k
    ch.h_r[k].resize(scn.N);
    if (scn.N > 0) {
      const double g = std::sqrt(
          pathloss(dist(scn.ris_pos, users[k]), scn.kappa_reflect, scn.C0_dB, scn.D0));
      const Eigen::VectorXcd los = steering(scn.N, angle_from_to(scn.ris_pos, users[k]));
      for (int i = 0; i < scn.N; ++i)
        ch.h_r[k](i) = g * (w_los * los(i) + w_nlos * rnd.cn());
    }
    // BS -> user k
    ch.h_b[k].resize(scn.M);
    const double g = std::sqrt(
        pathloss(dist(scn.bs_pos, users[k]), scn.kappa_direct, scn.C0_dB, scn.D0));
    const Eigen::VectorXcd los = steering(scn.M, angle_from_to(scn.bs_pos, users[k]));
    for (int i = 0; i < scn.M; ++i)
      ch.h_b[k](i) = g * (w_los * los(i) + w_nlos * rnd.cn());
  }
  return ch;
}

ChannelSet perturb_csi(const ChannelSet& ch, double xi, std::uint64_t seed) {
  if (xi < 0.0) throw std::domain_error("perturb_csi: xi must be nonnegative");
  if (xi == 0.0) return ch;
  Randn rnd(seed);
  const double s = std::sqrt(xi);
  auto jitter = [&](Cplx h) { return h + s * std::abs(h) * rnd.cn(); };

  ChannelSet out = ch;
  for (int i = 0; i < out.G.rows(); ++i)
    for (int j = 0; j < out.G.cols(); ++j)
      out.G(i, j) = jitter(ch.G(i, j));
  for (auto& v : out.h_r)
    for (int i = 0; i < v.size(); ++i) v(i) = jitter(v(i));
  for (auto& v : out.h_b)
    for (int i = 0; i < v.size(); ++i) v(i) = jitter(v(i));
  return out;
}

}  // namespace aris
