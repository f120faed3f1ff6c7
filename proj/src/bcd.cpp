#include "aris/bcd.hpp"

#include "aris/eh.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <atomic>
#include <optional>
#include <chrono>
#include <cmath>
#include <cstring>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

namespace aris {

namespace {

using clock_type = std::chrono::steady_clock;

double ms_since(clock_type::time_point t0) {
  return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}


struct SchemeSetup {
  Scenario scn;          // sigma_v zeroed for passive schemes
  RisVector theta0;
  std::vector<double> fixed_rho;  // empty = optimize rho
  bool run_ris_stage = false;
  bool active = false;
};

SchemeSetup prepare(Scheme scheme, const ChannelSet& ch, const Scenario& scn,
                    std::uint64_t seed) {
  SchemeSetup s;
  s.scn = scn;
  s.active = scheme_is_active(scheme);
  if (!s.active) s.scn.sigma2_v = 0.0;

  std::mt19937_64 rng(seed ^ 0xa5a5a5a5deadbeefULL);
  std::uniform_real_distribution<double> uphase(0.0, 2.0 * M_PI);

  s.theta0.v.resize(scn.N);
  if (scheme == Scheme::PassiveRandomPhase) {
    for (int n = 0; n < scn.N; ++n) s.theta0.v(n) = std::polar(1.0, uphase(rng));
  } else if (scn.N > 0) {
    // seed the surface in a good basin: align each element's cascaded path
    // for the first user against its direct path (matched-filter proxy beam)
    const double hb0 = ch.h_b[0].norm();
    const Eigen::VectorXcd w0 =
        hb0 > 0 ? Eigen::VectorXcd(ch.h_b[0] / hb0)
                : Eigen::VectorXcd(Eigen::VectorXcd::Unit(scn.M, 0));
    const Eigen::VectorXcd gw = ch.G * w0;
    for (int n = 0; n < scn.N; ++n) {
      const std::complex<double> b = std::conj(ch.h_r[0](n)) * gw(n);
      s.theta0.v(n) = std::abs(b) > 0 ? b / std::abs(b) : 1.0;
    }
  }

  switch (scheme) {
    case Scheme::Active:
      s.run_ris_stage = scn.N > 0;
      break;
    case Scheme::ActiveRandomRho:
      s.run_ris_stage = scn.N > 0;
      break;
    case Scheme::Passive:
    case Scheme::PassiveRandomRho:
      s.run_ris_stage = scn.N > 0;
      break;
    case Scheme::PassiveRandomPhase:
      s.run_ris_stage = false;
      break;
    case Scheme::NoRis:
      s.theta0.v.setZero();
      s.run_ris_stage = false;
      break;
  }
  if (scheme == Scheme::ActiveRandomRho || scheme == Scheme::PassiveRandomRho) {
    std::uniform_real_distribution<double> urho(0.1, 0.9);
    s.fixed_rho.resize(scn.K);
    for (double& r : s.fixed_rho) r = urho(rng);
  }
  return s;
}

}  // namespace

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Active: return "active";
    case Scheme::ActiveRandomRho: return "active_random_rho";
    case Scheme::Passive: return "passive";
    case Scheme::PassiveRandomRho: return "passive_random_rho";
    case Scheme::PassiveRandomPhase: return "passive_random_phase";
    case Scheme::NoRis: return "no_ris";
  }
  return "?";
}

Scheme scheme_from_name(const std::string& name) {
  for (Scheme s : {Scheme::Active, Scheme::ActiveRandomRho, Scheme::Passive,
                   Scheme::PassiveRandomRho, Scheme::PassiveRandomPhase, Scheme::NoRis})
    if (scheme_name(s) == name) return s;
  throw std::invalid_argument("unknown scheme: " + name);
}

bool scheme_is_active(Scheme s) {
  return s == Scheme::Active || s == Scheme::ActiveRandomRho;
}

std::string axis_name(Axis a) {
  switch (a) {
    case Axis::M: return "M";
    case Axis::N: return "N";
    case Axis::Xi: return "xi";
    case Axis::Pmax: return "p_max";
  }
  return "?";
}

Axis axis_from_name(const std::string& name) {
  for (Axis a : {Axis::M, Axis::N, Axis::Xi, Axis::Pmax})
    if (axis_name(a) == name) return a;
  throw std::invalid_argument("unknown sweep axis: " + name);
}

static RunResult run_impl(Scheme scheme, const ChannelSet& ch, const Scenario& scn0,
                          std::uint64_t seed) {
  const auto t_start = clock_type::now();
  SchemeSetup setup = prepare(scheme, ch, scn0, seed);
  const Scenario& scn = setup.scn;

  StageOptions bf_opt;
  bf_opt.reflect_constraint = setup.active && scn.N > 0;
  if (!setup.fixed_rho.empty()) bf_opt.fixed_rho = &setup.fixed_rho;
  RisOptions ris_opt;
  ris_opt.passive = !setup.active;

  RunResult out;
  out.trace.scheme = scheme;
  out.trace.seed = seed;
  out.theta = setup.theta0;

  double prev_f1 = 0.0;
  double kappa = 3.0;            // adaptive extrapolation strength
  std::optional<P3Result> pending;  // solution already computed for out.theta
  for (int it = 0; it < scn.max_outer; ++it) {
    P3Result p3;
    if (pending) {
      p3 = std::move(*pending);
      pending.reset();
    } else {
      try {
        p3 = solve_p3(ch, out.theta, scn, bf_opt);
      } catch (const std::exception& e) {
        if (it == 0) throw RunInfeasibleError(e.what());
        out.trace.stalled = true;
        out.trace.note = e.what();
        break;
      }
    }
    out.sol.w = p3.w;
    out.sol.rho = p3.rho;

    IterRecord rec;
    rec.f1 = p3.objective;
    rec.reflect = setup.active ? reflect_power(ch, out.theta, out.sol, scn) : 0.0;
    rec.total = rec.f1 + rec.reflect;
    rec.w_rank_residual =
        *std::max_element(p3.rank_residual.begin(), p3.rank_residual.end());
    rec.audit_ok =
        audit_solution(ch, out.theta, out.sol, scn, bf_opt.reflect_constraint).ok;

    const bool settled =
        it > 0 && std::abs(rec.f1 - prev_f1) / std::max(prev_f1, 1e-300) < scn.zeta;
    prev_f1 = rec.f1;

    if (settled || !setup.run_ris_stage || it + 1 == scn.max_outer) {
      out.trace.iters.push_back(rec);
      out.trace.converged = settled || !setup.run_ris_stage;
      break;
    }

    // RIS stage; on failure keep the previous coefficients
    try {
      LiftedData ld = lift(ch, out.sol, scn);
      IppaResult ir = ippa(ld, scn, lift_theta(out.theta), out.sol, ris_opt);
      rec.ippa_iters = ir.iterations;
      rec.t_rank_residual = ir.rank_residual;
      const RisVector cand = ir.theta;
      {
        // no feasibility pre-check against the current beams: the confirming
        // solve below re-optimizes them for the candidate surface anyway
        const RisVector kept = out.theta;
        try {
          // the stage map contracts roughly linearly, so line-search past the
          // candidate along this round's move: keep doubling the step while
          // the beamformer stage confirms the extrapolated surface is better
          const Eigen::VectorXcd dir = cand.v - out.theta.v;
          out.theta = cand;
          pending = solve_p3(ch, cand, scn, bf_opt);
          if (pending->objective > rec.f1) {
            // solver noise can make the confirmed candidate a hair worse;
            // keep the surface we already solved so f1 stays non-increasing
            pending.reset();
            out.theta = kept;
            out.trace.iters.push_back(rec);
            continue;
          }
          auto try_step = [&](double step) {
            RisVector ext{cand.v + step * dir};
            if (!setup.active)
              for (int n = 0; n < ext.v.size(); ++n) {
                const std::complex<double> z = ext.v(n);
                ext.v(n) = std::abs(z) > 0 ? z / std::abs(z) : cand.v(n);
              }
            try {
              P3Result pe = solve_p3(ch, ext, scn, bf_opt);
              const bool improved = pe.objective < pending->objective;
              if (std::getenv("ARIS_BCD_TRACE"))
                std::fprintf(stderr, "  it %d step %.2f base %.6e pe %.6e %s\n",
                             it, step, pending->objective, pe.objective,
                             improved ? "WIN" : "lose");
              if (improved) {
                out.theta = ext;
                pending = std::move(pe);
                kappa = step;
              }
              return improved;
            } catch (const std::exception& e) {
              if (std::getenv("ARIS_BCD_TRACE"))
                std::fprintf(stderr, "  it %d step %.2f pe EXC %s\n", it, step,
                             e.what());
              return false;
            }
          };
          double step = kappa;
          bool won = false;
          for (int probe = 0; probe < 6 && step <= 64.0; ++probe) {
            if (!try_step(step)) break;
            won = true;
            step *= 2.0;
          }
          if (won) {
            // the doubling pass can overshoot a unimodal gain along the ray;
            // walk back by halving while that keeps helping
            double back = 0.5 * kappa;
            for (int probe = 0; probe < 4 && back >= 0.25; ++probe) {
              if (!try_step(back)) break;
              back *= 0.5;
            }
          } else {
            kappa = std::max(1.0, 0.5 * kappa);
          }
        } catch (const std::exception& e) {
          // the beamformer stage broke down on the candidate surface; fall
          // back to the one we already solved so the run can settle
          pending.reset();
          out.theta = kept;
          out.trace.note = e.what();
        }
      }
    } catch (const StageInfeasibleError& e) {
      // keep the previous coefficients; the run settles on its own
      out.trace.note = e.what();
    } catch (const ExtractionError& e) {
      out.trace.note = e.what();
    }
    out.trace.iters.push_back(rec);
  }

  const Audit a =
      audit_solution(ch, out.theta, out.sol, scn, bf_opt.reflect_constraint);
  out.trace.sinr_margin = a.sinr_margin;
  out.trace.eh_margin = a.eh_margin;
  if (!a.ok) out.trace.converged = false;
  if (!out.trace.iters.empty()) {
    const IterRecord& last = out.trace.iters.back();
    out.trace.final_f1 = last.f1;
    out.trace.final_reflect =
        setup.active ? reflect_power(ch, out.theta, out.sol, scn) : 0.0;
    out.trace.final_total = out.trace.final_f1 + out.trace.final_reflect;
  }
  out.trace.wall_ms = ms_since(t_start);
  return out;
}

RunResult bcd_solve(const ChannelSet& ch, const Scenario& scn, std::uint64_t seed) {
  return run_impl(Scheme::Active, ch, scn, seed);
}

RunResult run_scheme(Scheme scheme, const ChannelSet& ch, const Scenario& scn,
                     std::uint64_t seed) {
  return run_impl(scheme, ch, scn, seed);
}

std::uint64_t trial_seed(std::uint64_t seed0, double axis_value, int trial, Scheme s) {
  // splitmix64 over the packed tuple
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(axis_value));
  std::memcpy(&bits, &axis_value, sizeof(bits));
  std::uint64_t x = seed0;
  for (std::uint64_t v : {bits, (std::uint64_t)trial, (std::uint64_t)s}) {
    x += 0x9e3779b97f4a7c15ULL + v;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    x = x ^ (x >> 31);
  }
  return x;
}

std::vector<SweepRow> sweep(const Scenario& base, Axis axis,
                            const std::vector<double>& values, int trials,
                            std::uint64_t seed0, const std::vector<Scheme>& schemes,
                            int workers) {
  if (values.empty()) throw std::invalid_argument("sweep: values must be nonempty");
  if (trials < 1) throw std::invalid_argument("sweep: trials must be >= 1");

  struct Task {
    double value;
    int trial;
    Scheme scheme;
  };
  std::vector<Task> tasks;
  for (double v : values)
    for (int t = 0; t < trials; ++t)
      for (Scheme s : schemes) tasks.push_back({v, t, s});

  std::vector<SweepRow> rows(tasks.size());
  std::atomic<size_t> next{0};

  auto run_task = [&](size_t idx) {
    const Task& tk = tasks[idx];
    Scenario scn = base;
    double xi = 0.0;
    switch (axis) {
      case Axis::M: scn.M = (int)std::lround(tk.value); break;
      case Axis::N: scn.N = (int)std::lround(tk.value); break;
      case Axis::Pmax: scn.p_max = tk.value; break;
      case Axis::Xi: xi = tk.value; break;
    }
    SweepRow& row = rows[idx];
    row.scheme = tk.scheme;
    row.axis = axis;
    row.axis_value = tk.value;
    row.trial = tk.trial;
    row.seed = trial_seed(seed0, tk.value, tk.trial, tk.scheme);
    // channels are shared across schemes at a fixed (value, trial)
    const std::uint64_t ch_seed = trial_seed(seed0, tk.value, tk.trial, Scheme::Active);
    try {
      const ChannelSet ch_true = gen_channels(scn, ch_seed);
      const ChannelSet ch_design =
          xi > 0.0 ? perturb_csi(ch_true, xi, ch_seed ^ 0x5bd1e995u) : ch_true;
      RunResult r = run_scheme(tk.scheme, ch_design, scn, row.seed);
      row.converged = r.trace.converged;
      row.iterations = (int)r.trace.iters.size();
      row.f1 = r.trace.final_f1;
      row.reflect = r.trace.final_reflect;
      row.total = r.trace.final_total;
      row.min_sinr_margin =
          *std::min_element(r.trace.sinr_margin.begin(), r.trace.sinr_margin.end());
      row.min_eh_margin =
          *std::min_element(r.trace.eh_margin.begin(), r.trace.eh_margin.end());
      row.wall_ms = r.trace.wall_ms;
      if (xi > 0.0) {
        Scenario audit_scn = scn;
        if (!scheme_is_active(tk.scheme)) audit_scn.sigma2_v = 0.0;
        row.true_csi_violation =
            !audit_solution(ch_true, r.theta, r.sol, audit_scn,
                            scheme_is_active(tk.scheme))
                 .ok;
      }
    } catch (const std::exception&) {
      row.failed = true;
    }
  };

  workers = std::max(1, workers);
  if (workers == 1) {
    for (size_t i = 0; i < tasks.size(); ++i) run_task(i);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1))
          run_task(i);
      });
    for (auto& th : pool) th.join();
  }
  return rows;
}

}  // namespace aris
