#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "shearq/critical.hpp"
#include "shearq/io.hpp"
#include "shearq/pde.hpp"

using namespace shearq;

namespace {

const double kPi = std::numbers::pi;

// Heat kernel convolved with the indicator of [-L, L].
double erf_oracle(double x, double L, double kappa, double t) {
  const double s = std::sqrt(4.0 * kappa * t);
  return 0.5 * (std::erf((L - x) / s) + std::erf((L + x) / s));
}

Grid2D line_grid(double X, int nx, int ny = 8, double ly = 2.0 * kPi) {
  Grid2D g;
  g.X = X;
  g.nx = nx;
  g.ny = ny;
  g.ly = ly;
  g.bc_x = BoundaryX::Absorbing;
  return g;
}

double erf_error(const Trajectory& tr, double L, double t) {
  const Field2D& snap = tr.snapshots.back();
  double err = 0.0;
  for (int i = 0; i < tr.grid.nx; ++i) {
    const double ref = erf_oracle(tr.grid.x(i), L, 1.0, t);
    for (int j = 0; j < tr.grid.ny; ++j) err = std::max(err, std::abs(snap.values(i, j) - ref));
  }
  return err;
}

const IgnitionReaction kZero = build_reaction("zero", 0.25);
const IgnitionReaction kDefault = build_reaction("quadratic-ignition", 0.25);

}  // namespace

TEST_CASE("pure diffusion matches the erf heat-kernel oracle") {
  PhysParams p;
  const ShearProfile zero = make_profile("constant", {{"c", 0.0}}, 2.0 * kPi);
  InitialData init;
  init.L = 1.0;
  for (double A : {0.0, 5.0}) {
    const Trajectory tr = evolve_T(p, kZero, zero, A, init, line_grid(10.0, 320), 1.0, {1.0});
    CHECK(erf_error(tr, 1.0, 1.0) <= 5e-3);
    CHECK_FALSE(tr.domain_clipped);
    const Trajectory phi = evolve_Phi(p, zero, A, init, line_grid(10.0, 320), 1.0, {1.0});
    CHECK(erf_error(phi, 1.0, 1.0) <= 5e-3);
  }
}

TEST_CASE("second-order convergence against the erf oracle") {
  PhysParams p;
  const ShearProfile zero = make_profile("constant", {{"c", 0.0}}, 2.0 * kPi);
  InitialData init;
  init.L = 1.0;
  std::vector<double> errs;
  for (int nx : {80, 160, 320}) {
    SolverOptions opt;
    opt.dt_max = 2e-3;  // keep time error below space error at every level
    const Trajectory tr = evolve_Phi(p, zero, 0.0, init, line_grid(10.0, nx), 1.0, {1.0}, opt);
    errs.push_back(erf_error(tr, 1.0, 1.0));
  }
  const double order1 = std::log2(errs[0] / errs[1]);
  const double order2 = std::log2(errs[1] / errs[2]);
  CHECK(order1 >= 1.7);
  CHECK(order2 >= 1.7);
}

TEST_CASE("constant shear translates the A = 0 solution") {
  PhysParams p;
  const double c = 0.5, A = 2.0, t = 2.0;  // shift A c t = 2, a whole number of cells
  const ShearProfile u = make_profile("constant", {{"c", c}}, 2.0 * kPi);
  const ShearProfile zero = make_profile("constant", {{"c", 0.0}}, 2.0 * kPi);
  InitialData init;
  init.L = 2.0;
  const Grid2D g = line_grid(16.0, 256);
  const Trajectory moved = evolve_T(p, kDefault, u, A, init, g, t, {t});
  const Trajectory still = evolve_T(p, kDefault, zero, 0.0, init, g, t, {t});
  double err = 0.0;
  for (int i = 0; i < g.nx; ++i) {
    const double ref = sample_field(g, still.snapshots.back().values, g.x(i) - A * c * t, 0.0);
    err = std::max(err, std::abs(moved.snapshots.back().values(i, 0) - ref));
  }
  CHECK(err <= 1e-3);
}

TEST_CASE("maximum principle over random configurations") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  PhysParams p;
  const ShearProfile u = make_profile("sine", {}, 2.0 * kPi);
  for (int trial = 0; trial < 6; ++trial) {
    InitialData init;
    init.L = 0.5 + 3.0 * unif(rng);
    init.eta = 0.3 + 0.7 * unif(rng);
    const double A = std::pow(10.0, 3.0 * unif(rng));
    Grid2D g = line_grid(20.0, 128, 16);
    g.bc_x = trial % 2 ? BoundaryX::Periodic : BoundaryX::Absorbing;
    for (int eq = 0; eq < 3; ++eq) {
      Trajectory tr;
      if (eq == 0) tr = evolve_T(p, kDefault, u, A, init, g, 2.0, {0.5, 1.0, 2.0});
      if (eq == 1) tr = evolve_Phi(p, u, A, init, g, 2.0, {0.5, 1.0, 2.0});
      if (eq == 2) tr = evolve_Psi(p, u, A, init, g, 2.0, {0.5, 1.0, 2.0});
      for (const auto& s : tr.snapshots) {
        CHECK(s.values.minCoeff() >= 0.0);
        CHECK(s.values.maxCoeff() <= 1.0);
      }
      CHECK(tr.max_overshoot <= 1e-10);
      for (std::size_t k = 1; k < tr.times.size(); ++k) REQUIRE(tr.times[k] > tr.times[k - 1]);
    }
  }
}

TEST_CASE("comparison bounds on a common grid") {
  PhysParams p;
  const ShearProfile u = make_profile("sine", {}, 2.0 * kPi);
  InitialData init;
  init.L = 2.0;
  Grid2D g = line_grid(32.0, 256, 32);
  g.bc_x = BoundaryX::Periodic;
  const std::vector<double> rec = {0.5, 1.0, 2.0, 4.0};
  for (double A : {0.0, 10.0}) {
    const Trajectory T = evolve_T(p, kDefault, u, A, init, g, 4.0, rec);
    const Trajectory Phi = evolve_Phi(p, u, A, init, g, 4.0, rec);
    const Trajectory Psi = evolve_Psi(p, u, A, init, g, 4.0, rec);
    for (std::size_t k = 0; k < rec.size(); ++k) {
      const double growth = std::exp(p.bigM * rec[k]);
      CHECK((T.snapshots[k].values - Phi.snapshots[k].values * growth).maxCoeff() <= 1e-8);
      CHECK((sup_over_x(Phi.snapshots[k].values) - sup_over_x(Psi.snapshots[k].values)).maxCoeff() <= 2e-2);
    }
  }
}

TEST_CASE("Psi without shear keeps the initial indicator") {
  PhysParams p;
  const ShearProfile zero = make_profile("constant", {{"c", 0.0}}, 2.0 * kPi);
  const ShearProfile sine = make_profile("sine", {}, 2.0 * kPi);
  InitialData init;
  init.L = 1.0;
  const Grid2D g = line_grid(4.0, 64);
  for (const auto& [u, A] : {std::pair{zero, 7.0}, std::pair{sine, 0.0}}) {
    const Trajectory tr = evolve_Psi(p, u, A, init, g, 3.0, {3.0});
    for (int i = 0; i < g.nx; ++i) {
      for (int j = 0; j < g.ny; ++j) {
        REQUIRE(tr.snapshots.back().values(i, j) == doctest::Approx(init.cell_average(g.x(i), g.dx())).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("domain clipping is flagged") {
  PhysParams p;
  const ShearProfile u = make_profile("sine", {}, 2.0 * kPi);
  InitialData init;
  init.L = 1.0;
  const Trajectory tr = evolve_Phi(p, u, 10.0, init, line_grid(3.0, 64), 1.0);
  CHECK(tr.domain_clipped);
  CHECK(tr.boundary_max > 1e-8);
  SolverOptions stop;
  stop.stop_on_clip = true;
  const Trajectory early = evolve_Phi(p, u, 10.0, init, line_grid(3.0, 64), 1.0, {}, stop);
  CHECK(early.stopped_early);
  CHECK(early.t_final < 1.0);
}

TEST_CASE("solver output is deterministic") {
  PhysParams p;
  const ShearProfile u = make_profile("sine", {}, 2.0 * kPi);
  InitialData init;
  init.L = 2.0;
  const Grid2D g = line_grid(20.0, 128, 16);
  const Trajectory a = evolve_T(p, kDefault, u, 30.0, init, g, 2.0);
  const Trajectory b = evolve_T(p, kDefault, u, 30.0, init, g, 2.0);
  CHECK((a.final_field.values == b.final_field.values).all());
  CHECK(a.sup == b.sup);
}

TEST_CASE("Dirichlet strip problem") {
  PhysParams p;
  auto strip = [](double l, double X, int nx, int ny) {
    Grid2D g = line_grid(X, nx, ny, l);
    g.bc_y = BoundaryY::Dirichlet;
    return g;
  };
  SUBCASE("narrow strip extinguishes") {
    const double l = 0.5 * kPi;
    const Trajectory tr = solve_dirichlet_strip(l, 5.0, p, kDefault, strip(l, 12.0, 96, 16), 20.0);
    bool below = false;
    for (double s : tr.sup) below = below || s <= p.theta0 / 2;
    CHECK(below);
  }
  SUBCASE("wide strip persists") {
    const double l = 12.0;
    const Trajectory tr = solve_dirichlet_strip(l, 30.0, p, kDefault, strip(l, 40.0, 160, 24), 30.0);
    for (double s : tr.sup) REQUIRE(s >= p.theta0);
  }
  SUBCASE("pure diffusion decays at the lowest Dirichlet rate") {
    const double l = 2.0;
    const Grid2D g = strip(l, 40.0, 160, 32);
    const Trajectory tr = solve_dirichlet_strip(l, 30.0, p, kZero, g, 3.0);
    auto sup_at = [&](double t) {
      std::size_t k = 0;
      while (tr.times[k] < t) ++k;
      return tr.sup[k];
    };
    const double rate = std::log(sup_at(1.0) / sup_at(3.0)) / 2.0;
    const double dy = g.dy();
    const double discrete = 4.0 / (dy * dy) * std::pow(std::sin(kPi * dy / (2.0 * l)), 2);
    CHECK(std::abs(rate - discrete) <= 0.1 * discrete);
    CHECK(discrete == doctest::Approx(kPi * kPi / (l * l)).epsilon(0.01));
  }
  SUBCASE("Dirichlet solution stays below the periodic one") {
    const double l = 5.0;
    InitialData init;
    init.L = 3.0;
    const Trajectory phi = solve_dirichlet_strip(l, init.L, p, kDefault, strip(l, 15.0, 120, 16), 5.0, {});
    const Trajectory T = evolve_T(p, kDefault, make_profile("constant", {{"c", 0.0}}, l), 0.0, init,
                                  line_grid(15.0, 120, 8, l), 5.0);
    for (int i = 0; i < 120; ++i) {
      REQUIRE(phi.final_field.values.row(i).maxCoeff() <= T.final_field.values(i, 0) + 1e-10);
    }
  }
}

TEST_CASE("one-dimensional Dirichlet problem") {
  PhysParams p;
  const double ell = critical_plateau_length(kDefault, p).ell_tilde;
  SUBCASE("zero data stays zero") {
    const Trajectory1D tr = solve_1d_dirichlet(5.0, p, kDefault, Eigen::ArrayXd::Zero(32), 10.0);
    CHECK(tr.final_profile.abs().maxCoeff() == 0.0);
  }
  SUBCASE("below ell_tilde everything dies") {
    const Trajectory1D tr = solve_1d_dirichlet(0.9 * ell, p, kDefault, Eigen::ArrayXd::Ones(64), 200.0);
    CHECK(tr.sup.back() < 1e-3);
  }
  SUBCASE("above a stationary profile the solution persists") {
    const StationaryProfile s = stationary_profile(0.8, kDefault, p, 2001);
    const double l = s.length + 0.5;
    const int n = 128;
    const double dy = l / (n + 1);
    Eigen::ArrayXd init(n);
    for (int j = 0; j < n; ++j) {
      const double y = (j + 1) * dy - 0.25;  // profile centred in the longer interval
      if (y <= 0.0 || y >= s.length) {
        init(j) = 0.0;
        continue;
      }
      const double pos = y / s.length * (s.y.size() - 1);
      const int k = std::min(static_cast<int>(pos), static_cast<int>(s.y.size()) - 2);
      init(j) = s.psi(k) + (pos - k) * (s.psi(k + 1) - s.psi(k));
    }
    const Trajectory1D tr = solve_1d_dirichlet(l, p, kDefault, init, 100.0);
    for (double v : tr.sup) REQUIRE(v >= p.theta0);
  }
}

TEST_CASE("snapshot and history files") {
  PhysParams p;
  InitialData init;
  const Grid2D g = line_grid(4.0, 16, 8);
  const Trajectory tr = evolve_Phi(p, make_profile("sine", {}, 2.0 * kPi), 1.0, init, g, 0.2, {0.1});
  const auto dir = std::filesystem::temp_directory_path() / "shearq_pde_test";
  std::filesystem::remove_all(dir);
  write_snapshot_csv((dir / "s.csv").string(), g, tr.snapshots[0]);
  const std::string csv = read_file((dir / "s.csv").string());
  CHECK(csv.rfind("t,x,y,value\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + g.nx * g.ny);

  write_snapshot_binary((dir / "s.bin").string(), g, tr.snapshots[0]);
  const std::string bin = read_file((dir / "s.bin").string());
  REQUIRE(bin.size() == sizeof(double) * g.nx * g.ny);
  double first = 0.0, second = 0.0;
  std::memcpy(&first, bin.data(), sizeof(double));
  std::memcpy(&second, bin.data() + sizeof(double), sizeof(double));
  CHECK(first == tr.snapshots[0].values(0, 0));
  CHECK(second == tr.snapshots[0].values(1, 0));  // x fastest
  CHECK(std::filesystem::exists(dir / "s.bin.json"));

  write_history_csv((dir / "h.csv").string(), tr);
  const std::string h = read_file((dir / "h.csv").string());
  CHECK(std::count(h.begin(), h.end(), '\n') == 1 + static_cast<long>(tr.times.size()));
  std::filesystem::remove_all(dir);
}

TEST_CASE("coarsening conserves mass and pads with zeros") {
  const Grid2D g = line_grid(4.0, 64, 8);
  FieldArray v(64, 8);
  for (int i = 0; i < 64; ++i) v.row(i).setConstant(std::exp(-g.x(i) * g.x(i)));
  Grid2D to;
  const FieldArray c = coarsen_x(v, g, 4, 10.0, &to);
  CHECK(to.dx() == doctest::Approx(4.0 * g.dx()));
  CHECK(to.X >= 10.0);
  CHECK(c.sum() * to.dx() == doctest::Approx(v.sum() * g.dx()).epsilon(1e-12));
  CHECK(c(0, 0) == 0.0);
  CHECK_THROWS(coarsen_x(v, g, 5, 10.0, &to));
}

TEST_CASE("bilinear sampling") {
  Grid2D g = line_grid(2.0, 8, 8, 1.0);
  FieldArray v(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) v(i, j) = g.x(i) + 10.0 * g.y(j);
  CHECK(sample_field(g, v, g.x(3), g.y(2)) == doctest::Approx(v(3, 2)));
  CHECK(sample_field(g, v, 0.5 * (g.x(3) + g.x(4)), g.y(2)) == doctest::Approx(0.5 * (v(3, 2) + v(4, 2))));
  CHECK(sample_field(g, v, g.x(3), g.y(2) + 1.0) == doctest::Approx(v(3, 2)));  // periodic in y
  CHECK(sample_field(g, v, 5.0, 0.0) == 0.0);
}
