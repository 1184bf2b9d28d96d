#include "shearq/quench.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace shearq {

QuenchOutcome detect_quench(const Trajectory& tr, double theta0) {
  QuenchOutcome out;
  out.horizon = tr.t_final;
  out.domain_clipped = tr.domain_clipped;
  for (std::size_t k = 0; k < tr.sup.size(); ++k) {
    if (tr.sup[k] <= theta0) {
      out.quenched = true;
      out.tau_detect = tr.times[k];
      for (std::size_t m = k + 1; m < tr.sup.size(); ++m) {
        if (tr.sup[m] > tr.sup[m - 1] + 1e-8) out.tail_monotone = false;
      }
      break;
    }
  }
  return out;
}

LineFit decay_fit(const std::vector<double>& times, const std::vector<double>& sup, double tau,
                  double s_from, double s_to) {
  if (!(s_from > 0.0 && s_to > s_from)) throw std::invalid_argument("decay_fit needs 0 < s_from < s_to");
  if (times.empty() || times.back() < tau + s_to * (1.0 - 1e-9)) {
    throw std::invalid_argument("decay_fit: history does not reach tau + s_to");
  }
  // Log-spaced probes so that late times do not dominate the regression.
  constexpr int kProbes = 41;
  std::vector<double> s_vals, sup_vals;
  std::size_t k = 1;
  for (int m = 0; m < kProbes; ++m) {
    const double s = s_from * std::pow(s_to / s_from, static_cast<double>(m) / (kProbes - 1));
    const double t = std::min(tau + s, times.back());
    while (k + 1 < times.size() && times[k] < t) ++k;
    const double t0 = times[k - 1], t1 = times[k];
    const double w = t1 > t0 ? std::clamp((t - t0) / (t1 - t0), 0.0, 1.0) : 1.0;
    const double v = sup[k - 1] + w * (sup[k] - sup[k - 1]);
    if (v <= 0.0) break;
    s_vals.push_back(s);
    sup_vals.push_back(v);
  }
  return loglog_fit(s_vals, sup_vals);
}

Grid2D make_grid(const GridPolicy& policy, double L, double A, const ShearProfile& u,
                 const PhysParams& params, double horizon) {
  if (!(L > 0.0)) throw std::invalid_argument("slab half-width L must be > 0");
  const double lam = params.laminar();
  Grid2D g;
  g.bc_x = policy.bc_x;
  g.bc_y = BoundaryY::Periodic;
  g.ly = u.period();
  g.ny = std::max({8, policy.ny_per_period,
                   static_cast<int>(std::ceil(g.ly / (policy.dy_max * lam) - 1e-9))});
  const double dx = std::min(L / policy.cells_per_L, policy.dx_max * lam);
  double X;
  if (policy.bc_x == BoundaryX::Periodic) {
    X = 0.5 * policy.x_period_factor * L;
  } else if (policy.X_override > 0.0) {
    X = policy.X_override;
  } else {
    const double umax = u.max_abs() + std::abs(policy.u_frame);
    X = L + std::abs(A) * umax * horizon + 8.0 * std::sqrt(params.kappa * horizon);
  }
  X = std::min(X, policy.X_max);
  g.nx = std::max(8, 2 * static_cast<int>(std::ceil(X / dx - 1e-9)));
  g.X = 0.5 * g.nx * dx;
  return g;
}

SolverOptions make_solver_options(const GridPolicy& policy) {
  SolverOptions opt;
  opt.dt_factor = policy.dt_factor;
  opt.dt_max = policy.dt_max;
  opt.u_frame = policy.u_frame;
  return opt;
}

QuenchOutcome quench_predicate(const QuenchProblem& problem, double L, double A) {
  InitialData init;
  init.L = L;
  init.eta = problem.eta;
  const Grid2D g = make_grid(problem.grid, L, A, problem.u, problem.params, problem.horizon);
  SolverOptions opt = make_solver_options(problem.grid);
  opt.stop_below = problem.f.theta0();
  const Trajectory tr = evolve_T(problem.params, problem.f, problem.u, A, init, g, problem.horizon, {}, opt);
  QuenchOutcome out = detect_quench(tr, problem.f.theta0());
  out.horizon = problem.horizon;
  return out;
}

CriticalAmplitude critical_amplitude(double L, const QuenchProblem& problem, double rel_tol,
                                     double A_guess, double A_cap) {
  if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
  if (problem.horizon < 20.0 / problem.params.bigM) {
    throw std::invalid_argument("critical_amplitude needs horizon >= 20 / M");
  }
  CriticalAmplitude r;
  r.L = L;
  r.horizon = problem.horizon;
  r.A_cap = A_cap;
  auto quenches = [&](double A) {
    const QuenchOutcome o = quench_predicate(problem, L, A);
    r.domain_clipped = r.domain_clipped || o.domain_clipped;
    return o.quenched;
  };
  if (quenches(0.0)) {
    r.A_high = 0.0;
    r.found = true;
    r.monotone_verified = true;
    r.bracket_verified = true;
    return r;
  }
  auto counted = [&](double A) {
    ++r.iterations;
    return quenches(A);
  };
  const double unit = problem.u.max_abs() > 0.0 ? 1.0 / problem.u.max_abs() : 1.0;
  double A = A_guess > 0.0 ? A_guess : std::max(1.0, L) * unit;
  A = std::min(A, A_cap);
  double lo = 0.0, hi = 0.0;
  if (counted(A)) {
    hi = A;
    const double floor = 1e-3 * A;
    for (A *= 0.5; A >= floor; A *= 0.5) {
      if (!counted(A)) {
        lo = A;
        break;
      }
      hi = A;
    }
  } else {
    lo = A;
    while (hi == 0.0) {
      if (A >= A_cap) {
        r.A_low = lo;
        return r;
      }
      A = std::min(2.0 * A, A_cap);
      if (counted(A)) hi = A; else lo = A;
    }
  }
  while (lo > 0.0 && hi / lo > 1.0 + rel_tol) {
    const double mid = std::sqrt(lo * hi);
    if (counted(mid)) hi = mid; else lo = mid;
  }
  r.A_low = lo;
  r.A_high = hi;
  r.found = true;
  r.bracket_verified = (lo == 0.0 || !quenches(lo)) && quenches(hi);
  r.monotone_verified = quenches(2.0 * hi) && quenches(4.0 * hi);
  return r;
}

MaxQuenchable max_quenchable_L(double A, const QuenchProblem& problem, double rel_tol, double L_guess,
                               double L_cap) {
  if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
  if (!(L_guess > 0.0)) throw std::invalid_argument("L_guess must be > 0");
  MaxQuenchable r;
  r.A = A;
  auto quenches = [&](double L) {
    ++r.iterations;
    return quench_predicate(problem, L, A).quenched;
  };
  double L = L_guess, lo = 0.0, hi = 0.0;
  if (quenches(L)) {
    lo = L;
    while (hi == 0.0) {
      L *= 2.0;
      if (L > L_cap) {
        r.L_low = lo;
        return r;
      }
      if (quenches(L)) lo = L; else hi = L;
    }
  } else {
    hi = L;
    while (lo == 0.0) {
      L *= 0.5;
      if (L < 1e-3 * L_guess) {
        r.L_high = hi;
        return r;
      }
      if (quenches(L)) lo = L; else hi = L;
    }
  }
  while (hi / lo > 1.0 + rel_tol) {
    const double mid = std::sqrt(lo * hi);
    if (quenches(mid)) lo = mid; else hi = mid;
  }
  r.L_low = lo;
  r.L_high = hi;
  r.L_A = 0.5 * (lo + hi);
  r.found = true;
  return r;
}

LinearityReport strong_quench_fit(std::vector<std::pair<double, double>> samples) {
  if (samples.size() < 4) throw std::invalid_argument("strong_quench_fit needs at least 4 samples");
  std::sort(samples.begin(), samples.end());
  if (!(samples.front().first > 0.0) || samples.back().first < 8.0 * samples.front().first) {
    throw std::invalid_argument("strong_quench_fit needs samples spanning a factor 8 in L");
  }
  LinearityReport rep;
  for (const auto& [L, A0] : samples) {
    if (!std::isfinite(A0)) {
      std::ostringstream msg;
      msg << "A0 undefined at L=" << L << " (no quench up to the cap)";
      rep.reason = msg.str();
      return rep;
    }
  }
  double sla = 0.0, sll = 0.0;
  std::vector<double> Ls, As;
  for (const auto& [L, A0] : samples) {
    sla += L * A0;
    sll += L * L;
    rep.max_ratio = std::max(rep.max_ratio, A0 / L);
    Ls.push_back(L);
    As.push_back(A0);
  }
  rep.C = sla / sll;
  for (std::size_t k = 1; k < samples.size(); ++k) {
    rep.adjacent_ratios.push_back(As[k] / As[k - 1]);
  }
  if (std::all_of(As.begin(), As.end(), [](double a) { return a > 0.0; })) {
    rep.loglog = loglog_fit(Ls, As);
  } else {
    rep.reason = "A0 = 0 for some L; log-log slope not defined";
  }
  rep.accepted = true;
  return rep;
}

}  // namespace shearq
