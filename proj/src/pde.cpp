#include "shearq/pde.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "shearq/io.hpp"

namespace shearq {

void Grid2D::validate() const {
  if (nx < 8 || ny < 8) throw std::invalid_argument("grid needs nx, ny >= 8");
  if (!(X > 0.0) || !std::isfinite(X)) throw std::invalid_argument("grid half-extent X must be > 0");
  if (!(ly > 0.0) || !std::isfinite(ly)) throw std::invalid_argument("grid y-extent must be > 0");
}

double stable_dt(const PhysParams& params, const Grid2D& grid, Equation eq, const SolverOptions& opt) {
  const double hmin = eq == Equation::YDiffusion ? grid.dy() : std::min(grid.dx(), grid.dy());
  double dt = opt.dt_factor * hmin * hmin / params.kappa;
  dt = std::min(dt, 0.1 / params.bigM);
  if (opt.dt_max > 0.0) dt = std::min(dt, opt.dt_max);
  return dt;
}

StripSolver::StripSolver(const PhysParams& params, const IgnitionReaction& f, const ShearProfile& u,
                         double A, const Grid2D& grid, Equation eq, SolverOptions opt)
    : params_(params), f_(f), grid_(grid), eq_(eq), opt_(opt), A_(A) {
  params_.validate();
  grid_.validate();
  if (!(opt_.dt_factor > 0.0)) throw std::invalid_argument("dt_factor must be > 0");
  row_velocity_.resize(static_cast<std::size_t>(grid_.ny));
  for (int j = 0; j < grid_.ny; ++j) {
    row_velocity_[static_cast<std::size_t>(j)] = A == 0.0 ? 0.0 : A * (u(grid_.y(j)) - opt_.u_frame);
  }
  dt_ = stable_dt(params_, grid_, eq_, opt_);
  T_ = FieldArray::Zero(grid_.nx, grid_.ny);
  work_ = FieldArray::Zero(grid_.nx, grid_.ny);
}

void StripSolver::set_initial(const InitialData& init) {
  init.validate();
  const double dx = grid_.dx();
  for (int i = 0; i < grid_.nx; ++i) T_.row(i).setConstant(init.cell_average(grid_.x(i), dx));
  t_ = 0.0;
}

void StripSolver::set_field(const FieldArray& values, double t) {
  if (values.rows() != grid_.nx || values.cols() != grid_.ny) {
    throw std::invalid_argument("field shape does not match the grid");
  }
  T_ = values;
  t_ = t;
}

void StripSolver::refactor(double dt_step) {
  if (dt_step == factored_dt_) return;
  const double tau = 0.5 * dt_step;
  const double ax = params_.kappa * tau / (2.0 * grid_.dx() * grid_.dx());
  const double ay = params_.kappa * tau / (2.0 * grid_.dy() * grid_.dy());
  tx_.factor(grid_.nx, ax, grid_.bc_x == BoundaryX::Periodic);
  ty_.factor(grid_.ny, ay, grid_.bc_y == BoundaryY::Periodic);
  factored_dt_ = dt_step;
}

void StripSolver::diffuse_half(double dt_step) {
  refactor(dt_step);
  const int nx = grid_.nx, ny = grid_.ny;
  if (eq_ != Equation::YDiffusion) {
    const bool per = grid_.bc_x == BoundaryX::Periodic;
    for (int j = 0; j < ny; ++j) {
      ConstTridiag<double>::apply_explicit(&T_(0, j), &work_(0, j), nx, tx_.a(), per);
      tx_.solve(&work_(0, j));
    }
    T_.swap(work_);
  }
  const double a = ty_.a();
  const double c = 1.0 - 2.0 * a;
  const bool per = grid_.bc_y == BoundaryY::Periodic;
  for (int j = 0; j < ny; ++j) {
    const int jl = j > 0 ? j - 1 : (per ? ny - 1 : -1);
    const int jr = j + 1 < ny ? j + 1 : (per ? 0 : -1);
    work_.col(j) = c * T_.col(j);
    if (jl >= 0) work_.col(j) += a * T_.col(jl);
    if (jr >= 0) work_.col(j) += a * T_.col(jr);
  }
  ty_.solve_columns(work_);
  T_.swap(work_);
}

void StripSolver::advect(double dt_step) {
  const int nx = grid_.nx;
  const bool per = grid_.bc_x == BoundaryX::Periodic;
  std::vector<double> old(static_cast<std::size_t>(nx));
  for (int j = 0; j < grid_.ny; ++j) {
    const double shift = row_velocity_[static_cast<std::size_t>(j)] * dt_step / grid_.dx();
    if (shift == 0.0) continue;
    // new[i] = old at fractional index i - shift = (i + k0) + theta.
    const double q = -shift;
    double k0d = std::floor(q);
    const double th = q - k0d;
    if (per) {
      k0d = std::fmod(k0d, static_cast<double>(nx));
      if (k0d < 0) k0d += nx;
    } else if (std::abs(k0d) > nx + 2) {
      T_.col(j).setZero();
      continue;
    }
    const long k0 = static_cast<long>(k0d);
    const double wm = -th * (th - 1.0) * (th - 2.0) / 6.0;
    const double w0 = (th + 1.0) * (th - 1.0) * (th - 2.0) / 2.0;
    const double w1 = -(th + 1.0) * th * (th - 2.0) / 2.0;
    const double w2 = (th + 1.0) * th * (th - 1.0) / 6.0;
    double* col = &T_(0, j);
    std::copy(col, col + nx, old.begin());
    auto at = [&](long k) -> double {
      if (per) {
        k %= nx;
        if (k < 0) k += nx;
        return old[static_cast<std::size_t>(k)];
      }
      return (k < 0 || k >= nx) ? 0.0 : old[static_cast<std::size_t>(k)];
    };
    for (int i = 0; i < nx; ++i) {
      const long k = i + k0;
      double v = th == 0.0 ? at(k) : wm * at(k - 1) + w0 * at(k) + w1 * at(k + 1) + w2 * at(k + 2);
      if (v < 0.0) {
        advection_clip_ = std::max(advection_clip_, -v);
        v = 0.0;
      } else if (v > 1.0) {
        advection_clip_ = std::max(advection_clip_, v - 1.0);
        v = 1.0;
      }
      col[i] = v;
    }
  }
}

void StripSolver::react(double dt_step) {
  const double M = params_.bigM;
  double* p = T_.data();
  const Eigen::Index n = T_.size();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double v = p[k];
    const double mid = v + 0.5 * dt_step * M * f_(v);
    p[k] = v + dt_step * M * f_(mid);
  }
}

double StripSolver::edge_max() const {
  return std::max(T_.row(0).abs().maxCoeff(), T_.row(grid_.nx - 1).abs().maxCoeff());
}

void StripSolver::step(double dt_step) {
  diffuse_half(dt_step);
  if (A_ != 0.0) advect(dt_step);
  if (eq_ == Equation::Nonlinear && !f_.is_zero()) react(dt_step);
  diffuse_half(dt_step);
  const double over = std::max(T_.maxCoeff() - 1.0, -T_.minCoeff());
  max_overshoot_ = std::max(max_overshoot_, std::max(over, 0.0));
  T_ = T_.max(0.0).min(1.0);
  boundary_max_ = std::max(boundary_max_, edge_max());
  t_ += dt_step;
}

void StripSolver::record(Trajectory& tr) const {
  tr.times.push_back(t_);
  tr.sup.push_back(sup());
  tr.l1.push_back(l1());
}

Trajectory StripSolver::run(double t_end, const std::vector<double>& snapshot_times) {
  Trajectory tr;
  tr.grid = grid_;
  tr.dt = dt_;
  tr.u_frame = opt_.u_frame;
  std::vector<double> targets;
  for (double s : snapshot_times) {
    if (s >= t_ && s <= t_end) targets.push_back(s);
  }
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  std::vector<bool> is_snapshot(targets.size(), true);
  if (targets.empty() || targets.back() < t_end) {
    targets.push_back(t_end);
    is_snapshot.push_back(false);
  }
  boundary_max_ = edge_max();
  record(tr);
  std::size_t next = 0;
  while (next < targets.size() && targets[next] <= t_) {
    if (is_snapshot[next]) tr.snapshots.push_back({T_, t_});
    ++next;
  }
  bool clipped = false;
  while (next < targets.size()) {
    const double target = targets[next];
    const double remaining = target - t_;
    if (remaining <= dt_ * (1.0 + 1e-9)) {
      step(remaining);
      t_ = target;
    } else {
      step(dt_);
    }
    ++tr.steps;
    record(tr);
    while (next < targets.size() && targets[next] <= t_) {
      if (is_snapshot[next]) tr.snapshots.push_back({T_, t_});
      ++next;
    }
    clipped = grid_.bc_x == BoundaryX::Absorbing && boundary_max_ > opt_.clip_threshold;
    if ((opt_.stop_below >= 0.0 && tr.sup.back() <= opt_.stop_below) || (clipped && opt_.stop_on_clip)) {
      tr.stopped_early = next < targets.size();
      break;
    }
  }
  tr.t_final = t_;
  tr.final_field = {T_, t_};
  tr.boundary_max = boundary_max_;
  tr.domain_clipped = grid_.bc_x == BoundaryX::Absorbing && boundary_max_ > opt_.clip_threshold;
  tr.max_overshoot = max_overshoot_;
  tr.advection_clip = advection_clip_;
  return tr;
}

namespace {

Trajectory evolve(Equation eq, const PhysParams& params, const IgnitionReaction& f, const ShearProfile& u,
                  double A, const InitialData& init, const Grid2D& grid, double t_end,
                  const std::vector<double>& record, const SolverOptions& opt) {
  if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be >= 0");
  StripSolver s(params, f, u, A, grid, eq, opt);
  s.set_initial(init);
  return s.run(t_end, record);
}

ShearProfile still_profile(double ly) { return make_profile("constant", {{"c", 0.0}}, ly); }

}  // namespace

Trajectory evolve_T(const PhysParams& params, const IgnitionReaction& f, const ShearProfile& u,
                    double A, const InitialData& init, const Grid2D& grid, double t_end,
                    const std::vector<double>& record, const SolverOptions& opt) {
  return evolve(Equation::Nonlinear, params, f, u, A, init, grid, t_end, record, opt);
}

Trajectory evolve_Phi(const PhysParams& params, const ShearProfile& u, double A,
                      const InitialData& init, const Grid2D& grid, double t_end,
                      const std::vector<double>& record, const SolverOptions& opt) {
  return evolve(Equation::Comparison, params, IgnitionReaction{}, u, A, init, grid, t_end, record, opt);
}

Trajectory evolve_Psi(const PhysParams& params, const ShearProfile& u, double A,
                      const InitialData& init, const Grid2D& grid, double t_end,
                      const std::vector<double>& record, const SolverOptions& opt) {
  return evolve(Equation::YDiffusion, params, IgnitionReaction{}, u, A, init, grid, t_end, record, opt);
}

Trajectory solve_dirichlet_strip(double l, double L, const PhysParams& params,
                                 const IgnitionReaction& f, const Grid2D& grid, double t_end,
                                 const SolverOptions& opt) {
  if (grid.bc_y != BoundaryY::Dirichlet || std::abs(grid.ly - l) > 1e-12 * l) {
    throw std::invalid_argument("solve_dirichlet_strip needs a Dirichlet grid with ly = l");
  }
  InitialData init;
  init.L = L;
  return evolve(Equation::Nonlinear, params, f, still_profile(l), 0.0, init, grid, t_end, {}, opt);
}

Trajectory solve_dirichlet_strip_from(const FieldArray& init, const PhysParams& params,
                                      const IgnitionReaction& f, const Grid2D& grid, double t_end,
                                      const SolverOptions& opt) {
  if (grid.bc_y != BoundaryY::Dirichlet) {
    throw std::invalid_argument("solve_dirichlet_strip_from needs a Dirichlet grid");
  }
  StripSolver s(params, f, still_profile(grid.ly), 0.0, grid, Equation::Nonlinear, opt);
  s.set_field(init, 0.0);
  return s.run(t_end);
}

Trajectory1D solve_1d_dirichlet(double l, const PhysParams& params, const IgnitionReaction& f,
                                const Eigen::ArrayXd& init, double t_end, const Options1D& opt) {
  params.validate();
  const Eigen::Index n = init.size();
  if (n < 8) throw std::invalid_argument("1D Dirichlet solver needs at least 8 interior nodes");
  if (!(l > 0.0)) throw std::invalid_argument("interval length l must be > 0");
  Trajectory1D tr;
  tr.l = l;
  tr.dy = l / static_cast<double>(n + 1);
  tr.dt = std::min(opt.dt_factor * tr.dy * tr.dy / params.kappa, 0.1 / params.bigM);
  Eigen::ArrayXd v = init.max(0.0).min(1.0), w(n);
  ConstTridiag<double> solver;
  double factored = -1.0;
  auto half = [&](double dt_step) {
    const double a = params.kappa * 0.5 * dt_step / (2.0 * tr.dy * tr.dy);
    if (dt_step != factored) {
      solver.factor(n, a, false);
      factored = dt_step;
    }
    ConstTridiag<double>::apply_explicit(v.data(), w.data(), n, a, false);
    solver.solve(w.data());
    v.swap(w);
  };
  double t = 0.0;
  tr.times.push_back(t);
  tr.sup.push_back(v.maxCoeff());
  while (t < t_end) {
    const double remaining = t_end - t;
    const double h = remaining <= tr.dt * (1.0 + 1e-9) ? remaining : tr.dt;
    half(h);
    if (!f.is_zero()) {
      for (Eigen::Index k = 0; k < n; ++k) {
        const double mid = v(k) + 0.5 * h * params.bigM * f(v(k));
        v(k) += h * params.bigM * f(mid);
      }
    }
    half(h);
    v = v.max(0.0).min(1.0);
    t = h == remaining ? t_end : t + h;
    tr.times.push_back(t);
    tr.sup.push_back(v.maxCoeff());
    if (opt.stop_below >= 0.0 && tr.sup.back() <= opt.stop_below) {
      tr.stopped_early = t < t_end;
      break;
    }
  }
  tr.final_profile = v;
  return tr;
}

Eigen::ArrayXd sup_over_x(const FieldArray& v) { return v.colwise().maxCoeff().transpose(); }

double sample_field(const Grid2D& grid, const FieldArray& v, double x, double y) {
  const double px = (x + grid.X) / grid.dx() - 0.5;
  const int i0 = static_cast<int>(std::floor(px));
  const double wx = px - i0;
  double py;
  if (grid.bc_y == BoundaryY::Periodic) {
    double s = std::fmod(y, grid.ly);
    if (s < 0.0) s += grid.ly;
    py = s / grid.dy();
  } else {
    py = y / grid.dy() - 1.0;
  }
  const int j0 = static_cast<int>(std::floor(py));
  const double wy = py - j0;
  auto at = [&](int i, int j) {
    if (grid.bc_x == BoundaryX::Periodic) {
      i = ((i % grid.nx) + grid.nx) % grid.nx;
    } else if (i < 0 || i >= grid.nx) {
      return 0.0;
    }
    if (grid.bc_y == BoundaryY::Periodic) {
      j = ((j % grid.ny) + grid.ny) % grid.ny;
    } else if (j < 0 || j >= grid.ny) {
      return 0.0;
    }
    return v(i, j);
  };
  return (1 - wx) * (1 - wy) * at(i0, j0) + wx * (1 - wy) * at(i0 + 1, j0) +
         (1 - wx) * wy * at(i0, j0 + 1) + wx * wy * at(i0 + 1, j0 + 1);
}

FieldArray coarsen_x(const FieldArray& v, const Grid2D& from, int factor, double X_new, Grid2D* to) {
  if (factor < 1 || from.nx % factor != 0) {
    throw std::invalid_argument("coarsening factor must divide nx");
  }
  const int nc = from.nx / factor;
  const double dxc = from.dx() * factor;
  const int pad = std::max(0, static_cast<int>(std::ceil((X_new - from.X) / dxc - 1e-9)));
  Grid2D g = from;
  g.nx = nc + 2 * pad;
  g.X = from.X + pad * dxc;
  FieldArray out = FieldArray::Zero(g.nx, from.ny);
  for (int i = 0; i < nc; ++i) {
    out.row(pad + i) = v.middleRows(static_cast<Eigen::Index>(i) * factor, factor).colwise().mean();
  }
  if (to != nullptr) *to = g;
  return out;
}

namespace {

const char* bc_x_name(BoundaryX b) { return b == BoundaryX::Periodic ? "periodic" : "absorbing"; }
const char* bc_y_name(BoundaryY b) { return b == BoundaryY::Periodic ? "periodic" : "dirichlet"; }

}  // namespace

void write_snapshot_csv(const std::string& path, const Grid2D& grid, const Field2D& field) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "t,x,y,value\n";
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      out << field.time << ',' << grid.x(i) << ',' << grid.y(j) << ',' << field.values(i, j) << '\n';
    }
  }
  atomic_write(path, out.str());
}

void write_snapshot_binary(const std::string& path, const Grid2D& grid, const Field2D& field) {
  static_assert(std::endian::native == std::endian::little, "binary snapshots assume a little-endian host");
  const auto* bytes = reinterpret_cast<const char*>(field.values.data());
  atomic_write(path, std::string(bytes, bytes + field.values.size() * sizeof(double)));
  nlohmann::json side = {
      {"format", "float64-le"},
      {"layout", "row-major (y, x), x fastest"},
      {"nx", grid.nx},
      {"ny", grid.ny},
      {"X", grid.X},
      {"ly", grid.ly},
      {"dx", grid.dx()},
      {"dy", grid.dy()},
      {"x0", grid.x(0)},
      {"y0", grid.y(0)},
      {"bc_x", bc_x_name(grid.bc_x)},
      {"bc_y", bc_y_name(grid.bc_y)},
      {"t", field.time},
  };
  atomic_write(path + ".json", side.dump(2) + "\n");
}

void write_history_csv(const std::string& path, const Trajectory& tr) {
  std::ostringstream out;
  out << std::setprecision(17) << "t,sup,l1\n";
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    out << tr.times[k] << ',' << tr.sup[k] << ',' << tr.l1[k] << '\n';
  }
  atomic_write(path, out.str());
}

}  // namespace shearq
