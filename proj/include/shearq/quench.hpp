#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "shearq/model.hpp"
#include "shearq/pde.hpp"
#include "shearq/profiles.hpp"
#include "shearq/stats.hpp"

namespace shearq {

struct QuenchOutcome {
  bool quenched = false;
  double tau_detect = std::numeric_limits<double>::infinity();
  double horizon = 0.0;
  double decay_exponent = std::numeric_limits<double>::quiet_NaN();
  bool tail_monotone = true;  ///< sup nonincreasing after tau_detect (within 1e-8)
  bool domain_clipped = false;
};

/// Quenched iff some recorded sup <= theta0; tau_detect is the first such time.
QuenchOutcome detect_quench(const Trajectory& tr, double theta0);

/// Slope of log sup(tau + s) against log s over s in [s_from, s_to].
LineFit decay_fit(const std::vector<double>& times, const std::vector<double>& sup, double tau,
                  double s_from, double s_to);

/// How an experiment turns (L, A) into a grid.
///
/// Periodic x uses the circle 2X = x_period_factor * L; a quench seen there
/// implies a quench on the line, so quench claims are conservative. Absorbing
/// x uses X = L + |A| max|u - u_frame| horizon + 8 sqrt(kappa horizon) unless
/// X_override > 0; there a persisting solution implies persistence on the
/// line, so non-quench claims are conservative.
struct GridPolicy {
  BoundaryX bc_x = BoundaryX::Periodic;
  double x_period_factor = 16.0;
  double X_override = 0.0;
  double X_max = 1e4;
  double cells_per_L = 16.0;
  double dx_max = 0.5;  ///< in units of sqrt(kappa / M)
  int ny_per_period = 16;
  double dy_max = 0.5;  ///< in units of sqrt(kappa / M)
  double dt_factor = 0.25;
  double dt_max = 0.0;
  double u_frame = 0.0;
};

Grid2D make_grid(const GridPolicy& policy, double L, double A, const ShearProfile& u,
                 const PhysParams& params, double horizon);

SolverOptions make_solver_options(const GridPolicy& policy);

/// Everything fixed while a search varies L or A.
struct QuenchProblem {
  PhysParams params;
  IgnitionReaction f;
  ShearProfile u;
  GridPolicy grid;
  double horizon = 50.0;
  double eta = 1.0;
};

/// Runs evolve_T for the slab of half-width L at amplitude A, stopping at the
/// first quench.
QuenchOutcome quench_predicate(const QuenchProblem& problem, double L, double A);

struct CriticalAmplitude {
  double L = 0.0;
  double A_low = 0.0;   ///< largest tested amplitude without quench
  double A_high = std::numeric_limits<double>::infinity();  ///< smallest tested quenching amplitude
  int iterations = 0;   ///< predicate runs
  bool found = false;
  bool monotone_verified = false;  ///< 2 A_high and 4 A_high quench too
  bool bracket_verified = false;   ///< endpoints re-run after bisection
  bool domain_clipped = false;
  double horizon = 0.0;
  double A_cap = 0.0;
};

/// Doubling (up or down from A_guess) then geometric bisection of the
/// predicate "quenches within the horizon" until A_high / A_low <= 1 + rel_tol.
CriticalAmplitude critical_amplitude(double L, const QuenchProblem& problem, double rel_tol,
                                     double A_guess = 0.0, double A_cap = 1e6);

struct MaxQuenchable {
  double A = 0.0;
  double L_low = 0.0;   ///< largest tested half-width that quenches
  double L_high = std::numeric_limits<double>::infinity();  ///< smallest tested that does not
  double L_A = 0.0;     ///< bracket midpoint
  int iterations = 0;
  bool found = false;
};

/// Bisection on L of the predicate at fixed A.
MaxQuenchable max_quenchable_L(double A, const QuenchProblem& problem, double rel_tol,
                               double L_guess = 1.0, double L_cap = 1e3);

struct LinearityReport {
  bool accepted = false;
  std::string reason;
  double C = 0.0;             ///< least-squares slope through the origin
  double max_ratio = 0.0;     ///< max A0(L) / L
  LineFit loglog;             ///< log A0 against log L
  std::vector<double> adjacent_ratios;  ///< A0(L_{k+1}) / A0(L_k), samples sorted by L
};

/// Fit of A0 = C L. Needs at least 4 finite samples spanning a factor 8 in L;
/// an infinite A0 (no quench up to the cap) rejects the fit.
LinearityReport strong_quench_fit(std::vector<std::pair<double, double>> samples);

}  // namespace shearq
