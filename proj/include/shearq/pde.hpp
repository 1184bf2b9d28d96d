#pragma once

#include <Eigen/Core>
#include <limits>
#include <string>
#include <vector>

#include "shearq/model.hpp"
#include "shearq/profiles.hpp"
#include "shearq/tridiag.hpp"

namespace shearq {

enum class BoundaryX { Absorbing, Periodic };
enum class BoundaryY { Periodic, Dirichlet };

/// Rectangular grid on [-X, X] x [0, ly].
///
/// x is cell-centred: x_i = -X + (i + 1/2) dx. In y, a periodic grid has nodes
/// y_j = j dy with dy = ly / ny; a Dirichlet grid stores the ny interior nodes
/// of [0, ly], y_j = (j + 1) dy with dy = ly / (ny + 1).
///
/// Absorbing x truncates the line with zero exterior values. Periodic x
/// replaces the line by a circle of length 2X; started from a single slab it
/// evolves the periodized data, which dominates the line solution.
struct Grid2D {
  double X = 10.0;
  int nx = 256;
  int ny = 32;
  double ly = 6.283185307179586;
  BoundaryX bc_x = BoundaryX::Absorbing;
  BoundaryY bc_y = BoundaryY::Periodic;

  double dx() const { return 2.0 * X / nx; }
  double dy() const { return bc_y == BoundaryY::Periodic ? ly / ny : ly / (ny + 1); }
  double x(int i) const { return -X + (i + 0.5) * dx(); }
  double y(int j) const { return bc_y == BoundaryY::Periodic ? j * dy() : (j + 1) * dy(); }
  void validate() const;
};

/// Field values indexed (i, j) = (x, y). Columns are rows of constant y,
/// contiguous in x.
using FieldArray = Eigen::ArrayXXd;

struct Field2D {
  FieldArray values;
  double time = 0.0;
};

/// Recorded evolution. Histories are sampled after every step.
struct Trajectory {
  Grid2D grid;
  std::vector<Field2D> snapshots;
  Field2D final_field;        ///< state when the run ended
  std::vector<double> times;  ///< history times (t = 0 first)
  std::vector<double> sup;    ///< max T at each history time
  std::vector<double> l1;     ///< integral of T over the grid
  double dt = 0.0;
  long steps = 0;
  double t_final = 0.0;
  double u_frame = 0.0;            ///< x velocity of the computational frame
  double boundary_max = 0.0;       ///< largest edge value seen (absorbing x)
  bool domain_clipped = false;     ///< boundary_max exceeded the clip threshold
  double max_overshoot = 0.0;      ///< worst excursion outside [0,1] before clamping
  double advection_clip = 0.0;     ///< worst interpolation overshoot removed after shifts
  bool stopped_early = false;      ///< a stop rule ended the run before t_end
};

enum class Equation {
  Nonlinear,   ///< T_t = kappa Lap T - A u T_x + M f(T)
  Comparison,  ///< Phi_t = kappa Lap Phi - A u Phi_x
  YDiffusion   ///< Psi_t = kappa Psi_yy - A u Psi_x
};

struct SolverOptions {
  double dt_factor = 0.25;   ///< dt = dt_factor min(dx, dy)^2 / kappa, capped by 0.1 / M
  double dt_max = 0.0;       ///< extra cap when > 0
  double u_frame = 0.0;      ///< subtract this velocity (units of A u) from the shear
  double clamp_eps = 1e-10;  ///< tolerated excursion outside [0,1]
  double clip_threshold = 1e-8;
  double stop_below = -1.0;  ///< stop once sup <= stop_below (disabled when < 0)
  bool stop_on_clip = false;
};

/// Diffusion/reaction step rule of the solver.
double stable_dt(const PhysParams& params, const Grid2D& grid, Equation eq, const SolverOptions& opt);

/// Strang-split solver: half diffusion, exact per-row shift, explicit midpoint
/// reaction, half diffusion; values clamped to [0,1] after each step.
class StripSolver {
 public:
  StripSolver(const PhysParams& params, const IgnitionReaction& f, const ShearProfile& u, double A,
              const Grid2D& grid, Equation eq, SolverOptions opt = {});

  void set_initial(const InitialData& init);
  void set_field(const FieldArray& values, double t);
  /// Advances by dt_step (the nominal dt unless shortened to hit a time).
  void step(double dt_step);
  /// Runs to t_end, storing snapshots at the requested times (t_end included).
  Trajectory run(double t_end, const std::vector<double>& snapshot_times = {});

  const FieldArray& field() const { return T_; }
  double time() const { return t_; }
  double dt() const { return dt_; }
  const Grid2D& grid() const { return grid_; }
  double sup() const { return T_.maxCoeff(); }
  double l1() const { return T_.sum() * grid_.dx() * grid_.dy(); }

 private:
  void diffuse_half(double dt_step);
  void advect(double dt_step);
  void react(double dt_step);
  void record(Trajectory& tr) const;
  void refactor(double dt_step);
  double edge_max() const;

  PhysParams params_;
  IgnitionReaction f_;
  Grid2D grid_;
  Equation eq_;
  SolverOptions opt_;
  double A_;
  std::vector<double> row_velocity_;  ///< A (u(y_j) - u_frame)
  double dt_;
  double t_ = 0.0;
  FieldArray T_, work_;
  double factored_dt_ = -1.0;
  ConstTridiag<double> tx_, ty_;
  double max_overshoot_ = 0.0;
  double advection_clip_ = 0.0;
  double boundary_max_ = 0.0;
};

Trajectory evolve_T(const PhysParams& params, const IgnitionReaction& f, const ShearProfile& u,
                    double A, const InitialData& init, const Grid2D& grid, double t_end,
                    const std::vector<double>& record = {}, const SolverOptions& opt = {});

Trajectory evolve_Phi(const PhysParams& params, const ShearProfile& u, double A,
                      const InitialData& init, const Grid2D& grid, double t_end,
                      const std::vector<double>& record = {}, const SolverOptions& opt = {});

Trajectory evolve_Psi(const PhysParams& params, const ShearProfile& u, double A,
                      const InitialData& init, const Grid2D& grid, double t_end,
                      const std::vector<double>& record = {}, const SolverOptions& opt = {});

/// phi_t = kappa Lap phi + M f(phi) on R x [0, l] with phi = 0 at y = 0, l.
/// The grid must carry bc_y = Dirichlet with ly = l.
Trajectory solve_dirichlet_strip(double l, double L, const PhysParams& params,
                                 const IgnitionReaction& f, const Grid2D& grid, double t_end,
                                 const SolverOptions& opt = {});

/// Same problem started from an arbitrary field on the Dirichlet grid.
Trajectory solve_dirichlet_strip_from(const FieldArray& init, const PhysParams& params,
                                      const IgnitionReaction& f, const Grid2D& grid, double t_end,
                                      const SolverOptions& opt = {});

/// One-dimensional psi_t = kappa psi_yy + M f(psi) on [0, l], zero at both ends.
struct Trajectory1D {
  double l = 0.0;
  double dy = 0.0;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<double> sup;
  Eigen::ArrayXd final_profile;  ///< interior nodes y_j = (j + 1) dy
  bool stopped_early = false;
};

struct Options1D {
  double dt_factor = 0.25;
  double stop_below = -1.0;
};

/// init holds the interior values (size n >= 8); the node spacing is l / (n + 1).
Trajectory1D solve_1d_dirichlet(double l, const PhysParams& params, const IgnitionReaction& f,
                                const Eigen::ArrayXd& init, double t_end, const Options1D& opt = {});

/// sup over x of a field, one value per y row.
Eigen::ArrayXd sup_over_x(const FieldArray& v);

/// Bilinear interpolation of a field at (x, y). y wraps on periodic grids;
/// outside the x range (and beyond Dirichlet walls) the exterior value is 0.
double sample_field(const Grid2D& grid, const FieldArray& v, double x, double y);

/// Conservative restriction to a grid coarser by an integer factor in x,
/// followed by zero padding to the wider half-extent X_new (same y grid).
FieldArray coarsen_x(const FieldArray& v, const Grid2D& from, int factor, double X_new, Grid2D* to);

/// CSV with header t,x,y,value; one row per cell.
void write_snapshot_csv(const std::string& path, const Grid2D& grid, const Field2D& field);

/// Flat little-endian float64 dump, row-major in (y, x) order (x fastest),
/// plus a JSON sidecar path + ".json" describing the grid.
void write_snapshot_binary(const std::string& path, const Grid2D& grid, const Field2D& field);

/// Trajectory history as CSV t,sup,l1.
void write_history_csv(const std::string& path, const Trajectory& tr);

}  // namespace shearq
