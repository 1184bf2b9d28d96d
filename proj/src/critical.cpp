#include "shearq/critical.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "shearq/numerics.hpp"
#include "shearq/parallel.hpp"

namespace shearq {

namespace {

void check_peak(double p, const IgnitionReaction& f) {
  if (!(p > f.theta0() && p < 1.0)) throw std::invalid_argument("peak p must lie in (theta0, 1)");
  if (!(f.antiderivative(p) > 0.0)) throw std::invalid_argument("F(p) must be > 0");
}

Eigen::Vector2d stationary_rhs(const Eigen::Vector2d& s, const IgnitionReaction& f,
                               const PhysParams& params) {
  return {s(1), -params.bigM / params.kappa * f(s(0))};
}

// State at position y of the shooting solution, for y up to the turning point.
Eigen::Vector2d shoot_to(double y, double p, const IgnitionReaction& f, const PhysParams& params) {
  const double s0 = std::sqrt(2.0 * params.bigM * f.antiderivative(p) / params.kappa);
  const double y_lin = f.theta0() / s0;
  if (y <= y_lin) return {s0 * y, s0};
  auto rhs = [&](double, const Eigen::Vector2d& s) { return stationary_rhs(s, f, params); };
  auto stop = [&](double t, const Eigen::Vector2d&) { return y - t; };
  return dopri_until<Eigen::Vector2d>(rhs, stop, y_lin, Eigen::Vector2d(f.theta0(), s0), 1e-3,
                                      1e-12, 1e-14, y + 1.0)
      .second;
}

double logit(double r) { return std::log(r / (1.0 - r)); }
double expit(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

double stationary_length(double p, const IgnitionReaction& f, const PhysParams& params, double tol) {
  check_peak(p, f);
  const double th = f.theta0();
  const double Fp = f.antiderivative(p);
  const double below = th / std::sqrt(Fp);
  const double w = p - th;
  auto g = [&](double s) {
    const double sn = std::sin(s), cs = std::sin(0.5 * std::numbers::pi - s);
    // Near the peak p - psi = w cs^2 is far below the rounding of psi itself,
    // so there the gap comes from a midpoint rule on the exact width.
    const double d = w * cs * cs;
    const double gap = d < 1e-6 * w ? d * f(p - 0.5 * d) : f.integral(p - d, p);
    if (gap <= 0.0) return 0.0;
    return 2.0 * w * sn * cs / std::sqrt(gap);
  };
  const double above = integrate_adaptive(g, 0.0, 0.5 * std::numbers::pi, tol);
  return std::sqrt(2.0 * params.kappa / params.bigM) * (below + above);
}

double shooting_length(double p, const IgnitionReaction& f, const PhysParams& params) {
  check_peak(p, f);
  const double s0 = std::sqrt(2.0 * params.bigM * f.antiderivative(p) / params.kappa);
  const double y_lin = f.theta0() / s0;
  auto rhs = [&](double, const Eigen::Vector2d& s) { return stationary_rhs(s, f, params); };
  auto stop = [](double, const Eigen::Vector2d& s) { return s(1); };
  const double limit = y_lin + 1e4 * std::sqrt(params.kappa / params.bigM);
  const auto [y_peak, state] = dopri_until<Eigen::Vector2d>(
      rhs, stop, y_lin, Eigen::Vector2d(f.theta0(), s0), 1e-3, 1e-12, 1e-14, limit);
  return 2.0 * y_peak;
}

StationaryProfile stationary_profile(double p, const IgnitionReaction& f, const PhysParams& params,
                                     int n) {
  if (n < 3) throw std::invalid_argument("stationary_profile needs n >= 3");
  StationaryProfile s;
  s.peak = p;
  s.length = stationary_length(p, f, params);
  s.y = Eigen::ArrayXd::LinSpaced(n, 0.0, s.length);
  s.psi.resize(n);
  s.dpsi.resize(n);
  const double half = 0.5 * s.length;
  for (int k = 0; k < n; ++k) {
    const double yk = s.y(k);
    const bool mirrored = yk > half;
    const Eigen::Vector2d st = shoot_to(mirrored ? s.length - yk : yk, p, f, params);
    s.psi(k) = st(0);
    s.dpsi(k) = mirrored ? -st(1) : st(1);
  }
  s.psi(0) = 0.0;
  s.psi(n - 1) = 0.0;
  return s;
}

double energy_defect(const StationaryProfile& s, const IgnitionReaction& f, const PhysParams& params) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < s.psi.size(); ++k) {
    const double lhs = 0.5 * params.kappa * s.dpsi(k) * s.dpsi(k);
    const double rhs = params.bigM * f.integral(std::min(s.psi(k), s.peak), s.peak);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

CriticalLength critical_plateau_length(const IgnitionReaction& f, const PhysParams& params) {
  params.validate();
  if (f.is_zero()) throw std::invalid_argument("critical_plateau_length needs a nonzero reaction");
  CriticalLength c;
  const double th = f.theta0();
  const double span = 1.0 - th;
  const double z_lo = logit(1e-3 / span), z_hi = logit(1.0 - 1e-3 / span);
  constexpr int kScan = 64;
  auto peak_of = [&](double z) { return th + span * expit(z); };
  auto length_of = [&](double z) { return stationary_length(peak_of(z), f, params, c.quad_tol); };
  std::vector<double> zs(kScan);
  int best = 0;
  for (int k = 0; k < kScan; ++k) {
    zs[static_cast<std::size_t>(k)] = z_lo + (z_hi - z_lo) * k / (kScan - 1);
    const double l = length_of(zs[static_cast<std::size_t>(k)]);
    c.scan_p.push_back(peak_of(zs[static_cast<std::size_t>(k)]));
    c.scan_l.push_back(l);
    if (l < c.scan_l[static_cast<std::size_t>(best)]) best = k;
  }
  const double za = zs[static_cast<std::size_t>(std::max(0, best - 1))];
  const double zb = zs[static_cast<std::size_t>(std::min(kScan - 1, best + 1))];
  const auto [z_star, l_star] = golden_section_min(length_of, za, zb, 1e-9);
  c.p_star = peak_of(z_star);
  c.ell_tilde = std::min(l_star, c.scan_l[static_cast<std::size_t>(best)]);
  if (c.ell_tilde != l_star) c.p_star = c.scan_p[static_cast<std::size_t>(best)];
  c.shooting_length = shooting_length(c.p_star, f, params);
  c.oracle_delta = std::abs(c.shooting_length - c.ell_tilde) / c.ell_tilde;
  return c;
}

std::string critical_report_json(const CriticalLength& c, const PhysParams& params,
                                 const IgnitionReaction& f) {
  nlohmann::json j = {
      {"ell_tilde", c.ell_tilde},
      {"p_star", c.p_star},
      {"pi_laminar", std::numbers::pi * params.laminar()},
      {"quadrature_tol", c.quad_tol},
      {"shooting_length", c.shooting_length},
      {"oracle_delta", c.oracle_delta},
      {"kappa", params.kappa},
      {"M", params.bigM},
      {"theta0", f.theta0()},
      {"reaction", f.family()},
      {"scan_p", c.scan_p},
      {"scan_l", c.scan_l},
  };
  return j.dump(2) + "\n";
}

Grid2D strip_grid(double l, double L, const PhysParams& params, double t_max,
                  const StripResolution& res, double dx_default) {
  Grid2D g;
  g.bc_x = BoundaryX::Absorbing;
  g.bc_y = BoundaryY::Dirichlet;
  g.ly = l;
  g.ny = res.ny;
  const double dx = res.dx > 0.0 ? res.dx : dx_default;
  const double X = L + 8.0 * std::sqrt(params.kappa * t_max);
  g.nx = 2 * static_cast<int>(std::ceil(X / dx));
  g.X = 0.5 * g.nx * dx;
  return g;
}

double quench_time(double l, double L, const IgnitionReaction& f, const PhysParams& params,
                   double t_max, const StripResolution& res) {
  if (!(l > 0.0) || !(L > 0.0)) throw std::invalid_argument("quench_time needs l, L > 0");
  const double target = 0.5 * f.theta0();
  const Grid2D g = strip_grid(l, L, params, t_max, res, std::min(l, L) / 16.0);
  SolverOptions opt;
  opt.dt_factor = res.dt_factor;
  opt.stop_below = target;
  const Trajectory tr = solve_dirichlet_strip(l, L, params, f, g, t_max, opt);
  for (std::size_t k = 0; k < tr.sup.size(); ++k) {
    if (tr.sup[k] <= target) {
      if (k == 0) return 0.0;
      const double s0 = tr.sup[k - 1], s1 = tr.sup[k];
      const double w = s0 == s1 ? 1.0 : (s0 - target) / (s0 - s1);
      return tr.times[k - 1] + w * (tr.times[k] - tr.times[k - 1]);
    }
  }
  return kNeverQuenched;
}

EllBracket bracket_ell(const IgnitionReaction& f, const PhysParams& params, double L_probe,
                       double t_max, double rel_tol, const StripResolution& res,
                       double ell_tilde_hint) {
  params.validate();
  EllBracket b;
  b.horizon = t_max;
  b.L_probe = L_probe;
  if (f.is_zero()) return b;  // pure Dirichlet diffusion decays for every l
  if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
  const double hint = ell_tilde_hint > 0.0 ? ell_tilde_hint : critical_plateau_length(f, params).ell_tilde;
  if (L_probe < 4.0 * hint) throw std::invalid_argument("bracket_ell needs L_probe >= 4 * ell_tilde");
  if (t_max < 50.0 / params.bigM) throw std::invalid_argument("bracket_ell needs t_max >= 50 / M");
  auto extinct = [&](double l, const StripResolution& r) {
    ++b.runs;
    return quench_time(l, L_probe, f, params, t_max, r) != kNeverQuenched;
  };
  double lo = 0.9 * hint;
  while (!extinct(lo, res)) {
    lo *= 0.8;
    if (lo < 0.5 * std::numbers::pi * params.laminar()) {
      throw std::runtime_error("bracket_ell: no extinguishing width found");
    }
  }
  double hi = 1.5 * hint;
  while (extinct(hi, res)) {
    lo = hi;
    hi *= 1.5;
    if (hi > 16.0 * hint) {
      b.l_low = lo;
      return b;
    }
  }
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (extinct(mid, res)) lo = mid; else hi = mid;
  }
  b.l_low = lo;
  b.l_high = hi;
  const StripResolution fine = res.refined();
  b.refinement_consistent = extinct(lo, fine) && !extinct(hi, fine);
  return b;
}

bool QuenchTimeTable::monotone() const {
  auto ok = [](std::map<double, std::vector<std::pair<double, double>>>& groups) {
    for (auto& [key, rows] : groups) {
      std::sort(rows.begin(), rows.end());
      for (std::size_t k = 1; k < rows.size(); ++k) {
        const double prev = rows[k - 1].second, cur = rows[k].second;
        if (cur == kNeverQuenched) continue;
        if (prev == kNeverQuenched || cur < prev * (1.0 - 1e-9)) return false;
      }
    }
    return true;
  };
  std::map<double, std::vector<std::pair<double, double>>> by_L, by_l;
  for (const auto& e : entries) {
    by_L[e.L].push_back({e.l, e.tau});
    by_l[e.l].push_back({e.L, e.tau});
  }
  return ok(by_L) && ok(by_l);
}

std::string QuenchTimeTable::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(12) << "l,L,tau,horizon,quenched_flag\n";
  for (const auto& e : entries) {
    out << e.l << ',' << e.L << ',';
    if (e.quenched()) out << e.tau; else out << "inf";
    out << ',' << e.horizon << ',' << (e.quenched() ? 1 : 0) << '\n';
  }
  return out.str();
}

QuenchTimeTable quench_time_table(const std::vector<double>& ls, const std::vector<double>& Ls,
                                  const IgnitionReaction& f, const PhysParams& params,
                                  double t_max, const StripResolution& res, int threads) {
  QuenchTimeTable table;
  for (double l : ls) {
    for (double L : Ls) table.entries.push_back({l, L, kNeverQuenched, t_max});
  }
  parallel_for(table.entries.size(), threads, [&](std::size_t k) {
    auto& e = table.entries[k];
    e.tau = quench_time(e.l, e.L, f, params, t_max, res);
  });
  return table;
}

}  // namespace shearq
