// Acceptance checks. Each criterion prints one PASS/FAIL line; the exit status
// is nonzero when any selected criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "shearq/critical.hpp"
#include "shearq/harness.hpp"
#include "shearq/parallel.hpp"
#include "shearq/pde.hpp"
#include "shearq/quench.hpp"
#include "shearq/stats.hpp"
#include "shearq/stochastic.hpp"

using namespace shearq;

namespace {

const double kPi = std::numbers::pi;

double kInf() { return std::numeric_limits<double>::infinity(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

int g_threads = 1;

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

ShearProfile sine() { return make_profile("sine", {}, 2.0 * kPi); }
IgnitionReaction default_reaction() { return build_reaction("quadratic-ignition", 0.25); }

// 1. ell_tilde exceeds pi times the laminar width and scales with it.
Verdict critical_length() {
  const IgnitionReaction f = default_reaction();
  PhysParams unit;
  const double ref = critical_plateau_length(f, unit).ell_tilde;
  double worst = 0.0;
  for (auto [kappa, M] : {std::pair{4.0, 1.0}, std::pair{1.0, 9.0}, std::pair{0.3, 7.0}}) {
    PhysParams p;
    p.kappa = kappa;
    p.bigM = M;
    const double l = critical_plateau_length(f, p).ell_tilde;
    worst = std::max(worst, std::abs(l / (std::sqrt(kappa / M) * ref) - 1.0));
  }
  const double margin = ref - kPi;
  return {margin >= 1e-3 && worst <= 1e-6,
          fmt("ell_tilde=%.10f, margin over pi=%.4f (need >=1e-3), scaling rel err=%.2e (need <=1e-6)", ref,
              margin, worst)};
}

// 2. T <= Phi e^{Mt} and sup_x Phi <= sup_x Psi up to a discretization error
// that halves under one refinement.
Verdict comparison_bounds() {
  PhysParams p;
  const IgnitionReaction f = default_reaction();
  const ShearProfile u = sine();
  InitialData init;
  init.L = 2.0;
  const std::vector<double> rec = {0.1, 0.25, 0.5, 1.0, 2.0};
  // violation[level][A][check]
  double viol[2][3][2] = {};
  const double amps[3] = {0.0, 10.0, 100.0};
  for (int level = 0; level < 2; ++level) {
    Grid2D g;
    g.X = 16.0;
    g.nx = 256 << level;
    g.ny = 64 << level;
    g.ly = u.period();
    g.bc_x = BoundaryX::Periodic;
    parallel_for(3, g_threads, [&](std::size_t a) {
      const double A = amps[a];
      const Trajectory T = evolve_T(p, f, u, A, init, g, rec.back(), rec);
      const Trajectory Phi = evolve_Phi(p, u, A, init, g, rec.back(), rec);
      const Trajectory Psi = evolve_Psi(p, u, A, init, g, rec.back(), rec);
      for (std::size_t k = 0; k < rec.size(); ++k) {
        const double growth = std::exp(p.bigM * rec[k]);
        viol[level][a][0] =
            std::max(viol[level][a][0], (T.snapshots[k].values - growth * Phi.snapshots[k].values).maxCoeff());
        viol[level][a][1] = std::max(
            viol[level][a][1],
            (sup_over_x(Phi.snapshots[k].values) - sup_over_x(Psi.snapshots[k].values)).maxCoeff());
      }
    });
  }
  bool pass = true;
  std::ostringstream d;
  d << "tol coarse->fine:";
  for (int a = 0; a < 3; ++a) {
    for (int c = 0; c < 2; ++c) {
      const double coarse = std::max(viol[0][a][c], 0.0), fine = std::max(viol[1][a][c], 0.0);
      pass = pass && fine <= std::max(0.5 * coarse, 1e-12);
      d << fmt(" A=%g %s %.2e->%.2e;", amps[a], c == 0 ? "T-Phi" : "Phi-Psi", coarse, fine);
    }
  }
  d << " (fine <= coarse/2 or <= 1e-12)";
  return {pass, d.str()};
}

// 3. Monte Carlo Psi against the finite-difference Psi on a 5x5 probe grid.
Verdict feynman_kac() {
  PhysParams p;
  const ShearProfile u = sine();
  const double A = 2.0, L = 1.0, t = 1.0;
  const std::vector<double> xs = {-2.0, -1.0, 0.0, 1.0, 2.0};
  const std::vector<double> ys = {0.0, 1.2, 2.5, 3.7, 5.0};
  InitialData init;
  init.L = L;
  Grid2D grids[2];
  Trajectory runs[2];
  parallel_for(2, g_threads, [&](std::size_t r) {
    Grid2D& g = grids[r];
    g.bc_x = BoundaryX::Absorbing;
    g.X = 8.0;
    g.nx = 512 << r;
    g.ny = 64 << r;
    g.ly = u.period();
    runs[r] = evolve_Psi(p, u, A, init, g, t);
  });
  PathEnsembleConfig cfg;
  cfg.n_paths = 10000;
  cfg.dt = 1e-3;
  cfg.threads = g_threads;
  double worst = 0.0;
  for (double y : ys) {
    const auto est = estimate_psi_mc_batch(t, xs, y, A, L, u, p, cfg);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double coarse = sample_field(grids[0], runs[0].final_field.values, xs[i], y);
      const double fine = sample_field(grids[1], runs[1].final_field.values, xs[i], y);
      const double bound = 3.0 * (est[i].stderr_ + std::abs(fine - coarse));
      const double gap = std::abs(est[i].mean - fine);
      worst = std::max(worst, bound > 0.0 ? gap / bound : (gap > 0.0 ? kInf() : 0.0));
    }
  }
  return {worst <= 1.0, fmt("worst |MC-FD| / 3(stderr+FD tol) = %.3f over 25 probes (need <=1)", worst)};
}

// 4. A plateau shorter than ell_tilde gives a quench bracket; a longer one
// survives every amplitude up to the cap.
Verdict dichotomy() {
  RunConfig c = config_from_json(R"({"params": {"kappa": 1, "M": 1}})");
  c.dichotomy.plateau_factors = {0.5, 2.0};
  c.dichotomy.L_factor = 10.0;
  c.horizon = 50.0;
  c.cap = 1e6;
  c.rel_tol = 0.05;
  c.threads = g_threads;
  const DichotomyReport rep = dichotomy_demo(c);
  const DichotomyRow& shortp = rep.rows[0];
  const DichotomyRow& longp = rep.rows[1];
  const bool pass = shortp.quenched && std::isfinite(shortp.A_high) && !longp.quenched &&
                    longp.outcome == "no quench up to cap";
  return {pass, fmt("plateau 0.5 ell_tilde: %s A0 in [%.4g, %.4g] (%d runs); plateau 2 ell_tilde: %s, "
                    "largest tested A=%.3g (cap 1e6, horizon 50, L=%.4g)",
                    shortp.outcome.c_str(), shortp.A_low, shortp.A_high, shortp.runs, longp.outcome.c_str(),
                    longp.A_low, longp.L)};
}

// 5. A0(2L) / A0(L) <= 2.4 for u = sin.
Verdict strong_quenching() {
  QuenchProblem q;
  q.f = default_reaction();
  q.u = sine();
  q.horizon = 50.0;
  const std::vector<double> Ls = {4.0, 8.0, 16.0, 32.0};
  std::vector<CriticalAmplitude> rows(Ls.size());
  parallel_for(Ls.size(), g_threads, [&](std::size_t k) { rows[k] = critical_amplitude(Ls[k], q, 0.05); });
  std::vector<std::pair<double, double>> samples;
  bool found = true;
  for (const auto& r : rows) {
    found = found && r.found;
    samples.push_back({r.L, r.found ? std::sqrt(std::max(r.A_low, 1e-300) * r.A_high) : kInf()});
  }
  if (!found) return {false, "no quench bracket for some L"};
  const LinearityReport lin = strong_quench_fit(samples);
  const double worst = *std::max_element(lin.adjacent_ratios.begin(), lin.adjacent_ratios.end());
  std::ostringstream d;
  d << "A0 at L=4,8,16,32:";
  for (const auto& [L, A0] : samples) d << fmt(" %.4g", A0);
  d << fmt("; max adjacent ratio %.3f (need <=2.4); C=%.3f", worst, lin.C);
  return {worst <= 2.4, d.str()};
}

// 6. log-log slopes of A0 against alpha in the two regimes.
Verdict scaling_exponents() {
  RunConfig c = config_from_json(R"({"params": {"kappa": 1, "M": 1}, "numerics": {"horizon": 50,
      "grid": {"ny_per_period": 8, "dt_factor": 2, "dy_max": 0.5, "cells_per_L": 16}}})");
  c.sweep.L = 2.0;
  c.threads = g_threads;
  c.sweep.regimes = {{"large", 8.0, 64.0}, {"small", 1.0 / 16.0, 0.5}};
  const SweepResult s = alpha_sweep(c, {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 8.0, 16.0, 32.0, 64.0},
                                    SweepMode::A0AtFixedL);
  const SweepFit& large = s.fits[0];
  const SweepFit& small = s.fits[1];
  const bool pass = large.ok && small.ok && std::abs(large.fit.slope - 1.0) <= 0.3 &&
                    std::abs(small.fit.slope + 2.0) <= 0.4;
  std::ostringstream d;
  d << fmt("slope alpha in [8,64]: %.3f (need 1.0+-0.3); slope alpha in [1/16,1/2]: %.3f (need -2.0+-0.4); A0:",
           large.fit.slope, small.fit.slope);
  for (const auto& r : s.rows) d << fmt(" %g:%.4g", r.alpha, r.A);
  return {pass, d.str()};
}

// 7. Quadrature variance and normality of the martingale term at alpha = 32.
Verdict martingale_clt() {
  PathEnsembleConfig cfg;
  cfg.n_paths = 10000;
  cfg.dt = 1e-2;
  cfg.seed = 7;
  cfg.threads = g_threads;
  const CltReport r = martingale_clt_sample(0.3, 32.0, sine(), cfg);
  const bool pass = std::abs(r.sigma2 - 0.5) <= 1e-6 && r.ks <= 0.03;
  return {pass, fmt("sigma2=%.10f (need 0.5+-1e-6), KS=%.4f (need <=0.03), sample var=%.4f, dt=%g", r.sigma2,
                    r.ks, r.sample_var, cfg.dt)};
}

// 8. RMS Ito residual over 1000 paths at dt, dt/2, dt/4 on shared paths.
Verdict ito_decomposition() {
  const ShearProfile u = sine();
  const Antiderivatives ad = build_antiderivatives(u);
  const double alpha = 4.0, dt = 1e-2;
  const int n = 1000;
  std::vector<std::array<double, 3>> sq(n);
  parallel_for(n, g_threads, [&](std::size_t p) {
    const BrownianPath fine = sample_path(0.3, alpha * alpha, dt / 4.0, 11, p);
    for (int level = 0; level < 3; ++level) {
      const double res = ito_residual(alpha, fine.coarsen(4 >> level), u, ad).residual;
      sq[p][static_cast<std::size_t>(level)] = res * res;
    }
  });
  double rms[3] = {};
  for (int level = 0; level < 3; ++level) {
    double s = 0.0;
    for (const auto& v : sq) s += v[static_cast<std::size_t>(level)];
    rms[level] = std::sqrt(s / n);
  }
  const double ratio = rms[2] / rms[0];
  return {ratio >= 0.35 && ratio <= 0.65,
          fmt("RMS at dt=%g,%g,%g: %.3e %.3e %.3e; RMS(dt/4)/RMS(dt)=%.3f (need 0.5+-30%%); per halving %.3f %.3f",
              dt, dt / 2, dt / 4, rms[0], rms[1], rms[2], ratio, rms[1] / rms[0], rms[2] / rms[1])};
}

// 9. Kanel two scales without flow, and the decay after extinction.
Verdict kanel() {
  PhysParams p;
  const IgnitionReaction f = default_reaction();
  const ShearProfile u = sine();
  // Narrow slab: a fine box until sup <= theta0, then a coarser and wider box
  // for the long diffusive tail.
  Grid2D g;
  g.bc_x = BoundaryX::Absorbing;
  g.X = 4.0;
  g.nx = 1280;
  g.ny = 8;
  g.ly = u.period();
  InitialData init;
  init.L = 0.1;
  SolverOptions opt;
  opt.stop_below = f.theta0();
  const Trajectory head = evolve_T(p, f, u, 0.0, init, g, 50.0, {}, opt);
  const QuenchOutcome q = detect_quench(head, f.theta0());
  if (!q.quenched) return {false, "L=0.1 did not fall below theta0 within t=50"};
  const double tau = q.tau_detect;
  const double tail = 100.0;
  Grid2D wide;
  const FieldArray start = coarsen_x(head.final_field.values, g, 16, 8.0 * std::sqrt(p.kappa * (tail + tau)), &wide);
  StripSolver solver(p, f, u, 0.0, wide, Equation::Nonlinear);
  solver.set_field(start, head.t_final);
  const Trajectory rest = solver.run(tau + tail + 1.0);
  std::vector<double> times = head.times, sup = head.sup;
  for (std::size_t k = 1; k < rest.times.size(); ++k) {
    times.push_back(rest.times[k]);
    sup.push_back(rest.sup[k]);
  }
  const LineFit fit = decay_fit(times, sup, tau, 1.0, tail);

  QuenchProblem wide_slab;
  wide_slab.f = f;
  wide_slab.u = u;
  wide_slab.grid.bc_x = BoundaryX::Absorbing;
  wide_slab.grid.ny_per_period = 8;
  wide_slab.horizon = 100.0;
  const QuenchOutcome persist = quench_predicate(wide_slab, 20.0, 0.0);

  // Clipping only removes heat from the absorbing box, so persistence there is conservative.
  const bool pass = !persist.quenched && fit.slope <= -0.4;
  return {pass, fmt("L=0.1: quench at t=%.4f, decay exponent over s in [1,100] = %.3f (need <=-0.4, r2=%.4f); "
                    "L=20: %s through t=100",
                    tau, fit.slope, fit.r2, persist.quenched ? "QUENCHED" : "persists")};
}

// 10. Sup over the (y, a) probe grid of P(integral in [a, a+eps]) against eps.
Verdict anticoncentration() {
  const ShearProfile u = sine();
  const std::vector<double> eps = {0.4, 0.2, 0.1, 0.05};
  std::vector<double> as;
  for (int i = 0; i < 16; ++i) as.push_back(-1.0 + 2.0 * i / 15.0);
  std::vector<Eigen::ArrayXXd> grids(16);
  parallel_for(16, g_threads, [&](std::size_t j) {
    PathEnsembleConfig cfg;
    cfg.n_paths = 10000;
    cfg.dt = 1e-3;
    cfg.seed = 100 + j;
    grids[j] = anticoncentration_grid(1.0, 2.0 * kPi * static_cast<double>(j) / 16.0, as, eps, u, cfg);
  });
  double sup[4] = {};
  for (const auto& g : grids) {
    for (int k = 0; k < 4; ++k) sup[k] = std::max(sup[k], g.col(k).maxCoeff());
  }
  const bool monotone = sup[1] <= sup[0] && sup[2] <= sup[1] && sup[3] <= sup[2];
  const double drop = sup[0] / sup[3];
  return {monotone && drop >= 2.0, fmt("sup at eps=0.4,0.2,0.1,0.05: %.4f %.4f %.4f %.4f; end-to-end drop %.2f (need "
                                       "nonincreasing and >=2)",
                                       sup[0], sup[1], sup[2], sup[3], drop)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shearq acceptance checks"};
  std::vector<int> selected;
  g_threads = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("-c,--criterion", selected, "criteria to run (default: all)")->check(CLI::Range(1, 10));
  app.add_option("--threads", g_threads, "worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"critical length lower bound and scaling", critical_length},
      {"comparison bounds", comparison_bounds},
      {"Feynman-Kac cross-validation", feynman_kac},
      {"plateau dichotomy", dichotomy},
      {"strong quenching", strong_quenching},
      {"scaling exponents in alpha", scaling_exponents},
      {"martingale CLT", martingale_clt},
      {"Ito decomposition", ito_decomposition},
      {"Kanel two scales and post-quench decay", kanel},
      {"anti-concentration trend", anticoncentration},
  };
  int failures = 0;
  for (int n : selected) {
    const auto& [name, fn] = criteria[static_cast<std::size_t>(n - 1)];
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %s: %s | %s | %.1f s\n", n, v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(),
                secs);
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
