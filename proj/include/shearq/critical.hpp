#pragma once

#include <Eigen/Core>
#include <limits>
#include <string>
#include <vector>

#include "shearq/model.hpp"
#include "shearq/pde.hpp"

namespace shearq {

inline constexpr double kNeverQuenched = std::numeric_limits<double>::infinity();

/// Symmetric Dirichlet solution of kappa psi'' + M f(psi) = 0 with peak p.
struct StationaryProfile {
  double peak = 0.0;
  double length = 0.0;
  Eigen::ArrayXd y;     ///< sample positions on [0, length]
  Eigen::ArrayXd psi;   ///< psi(y)
  Eigen::ArrayXd dpsi;  ///< psi'(y)
};

/// Time map l(p) = sqrt(2 kappa / M) * integral_0^p dpsi / sqrt(F(p) - F(psi)).
/// The part below theta0 is exact; above it psi = theta0 + (p - theta0) sin^2 s
/// removes the square-root singularity at the peak.
double stationary_length(double p, const IgnitionReaction& f, const PhysParams& params,
                         double tol = 1e-8);

/// Independent estimate of l(p) by shooting psi'(0) = sqrt(2 M F(p) / kappa)
/// to the turning point with an adaptive Dormand-Prince integrator.
double shooting_length(double p, const IgnitionReaction& f, const PhysParams& params);

/// Samples the stationary profile at n equally spaced points of [0, l(p)].
StationaryProfile stationary_profile(double p, const IgnitionReaction& f, const PhysParams& params,
                                     int n);

/// max |kappa psi'^2 / 2 - M (F(p) - F(psi))| over the samples.
double energy_defect(const StationaryProfile& s, const IgnitionReaction& f, const PhysParams& params);

struct CriticalLength {
  double ell_tilde = 0.0;
  double p_star = 0.0;
  double quad_tol = 1e-8;
  double shooting_length = 0.0;  ///< l(p*) by shooting
  double oracle_delta = 0.0;     ///< |shooting - quadrature| / quadrature at p*
  std::vector<double> scan_p;
  std::vector<double> scan_l;
};

/// min over p in (theta0, 1) of l(p): 64-point scan, evenly spaced in
/// logit((p - theta0) / (1 - theta0)) over (theta0 + 1e-3, 1 - 1e-3), then a
/// golden-section refinement around the best scan point.
CriticalLength critical_plateau_length(const IgnitionReaction& f, const PhysParams& params);

std::string critical_report_json(const CriticalLength& c, const PhysParams& params,
                                 const IgnitionReaction& f);

/// Resolution of Dirichlet strip runs. dx <= 0 selects min(l, L) / 16.
struct StripResolution {
  int ny = 16;
  double dx = 0.0;
  double dt_factor = 0.25;
  StripResolution refined() const { return {2 * ny, dx > 0.0 ? 0.5 * dx : 0.0, dt_factor}; }
};

Grid2D strip_grid(double l, double L, const PhysParams& params, double t_max,
                  const StripResolution& res, double dx_default);

/// First time sup phi <= theta0 / 2 on the Dirichlet strip of width l started
/// from the slab of half-width L, linearly interpolated in the sup history;
/// kNeverQuenched if the horizon t_max is reached first.
double quench_time(double l, double L, const IgnitionReaction& f, const PhysParams& params,
                   double t_max, const StripResolution& res = {});

struct EllBracket {
  double l_low = 0.0;
  double l_high = kNeverQuenched;
  double horizon = 0.0;
  double L_probe = 0.0;
  int runs = 0;
  bool refinement_consistent = true;  ///< endpoints classified alike on the refined grid
};

/// Bisection on l of the extinction predicate of the Dirichlet strip problem.
/// Returns l_high = kNeverQuenched for f = 0.
EllBracket bracket_ell(const IgnitionReaction& f, const PhysParams& params, double L_probe,
                       double t_max, double rel_tol, const StripResolution& res = {},
                       double ell_tilde_hint = 0.0);

struct QuenchTimeEntry {
  double l = 0.0;
  double L = 0.0;
  double tau = kNeverQuenched;
  double horizon = 0.0;
  bool quenched() const { return tau != kNeverQuenched; }
};

struct QuenchTimeTable {
  std::vector<QuenchTimeEntry> entries;
  /// tau nondecreasing in l at fixed L and in L at fixed l.
  bool monotone() const;
  std::string to_csv() const;
};

/// Fills the (l, L) table with independent runs on up to `threads` workers.
QuenchTimeTable quench_time_table(const std::vector<double>& ls, const std::vector<double>& Ls,
                                  const IgnitionReaction& f, const PhysParams& params,
                                  double t_max, const StripResolution& res = {}, int threads = 1);

}  // namespace shearq
