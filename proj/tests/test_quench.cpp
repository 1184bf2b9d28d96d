#include <doctest.h>

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "shearq/quench.hpp"

using namespace shearq;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

Trajectory synthetic(const std::vector<double>& times, const std::vector<double>& sup) {
  Trajectory tr;
  tr.times = times;
  tr.sup = sup;
  tr.t_final = times.back();
  return tr;
}

QuenchProblem sine_problem(double horizon) {
  QuenchProblem q;
  q.f = build_reaction("quadratic-ignition", 0.25);
  q.u = make_profile("sine", {}, 2.0 * std::numbers::pi);
  q.grid.cells_per_L = 8.0;
  q.grid.ny_per_period = 8;
  q.grid.dt_factor = 2.0;
  q.horizon = horizon;
  return q;
}

}  // namespace

TEST_CASE("quench detection on synthetic histories") {
  const QuenchOutcome none = detect_quench(synthetic({0, 1, 2}, {1.0, 0.9, 0.8}), 0.25);
  CHECK_FALSE(none.quenched);
  CHECK(none.tau_detect == kInf);
  CHECK(none.horizon == 2.0);

  const QuenchOutcome q = detect_quench(synthetic({0, 1, 2, 3, 4}, {1.0, 0.5, 0.25, 0.2, 0.1}), 0.25);
  CHECK(q.quenched);
  CHECK(q.tau_detect == 2.0);  // sup <= theta0 counts
  CHECK(q.tail_monotone);

  const QuenchOutcome bump = detect_quench(synthetic({0, 1, 2, 3}, {1.0, 0.2, 0.21, 0.1}), 0.25);
  CHECK(bump.quenched);
  CHECK_FALSE(bump.tail_monotone);
}

TEST_CASE("decay fit recovers a power law") {
  std::vector<double> times, sup;
  const double tau = 3.0;
  for (int k = 0; k <= 2000; ++k) {
    const double t = 0.1 * k;
    times.push_back(t);
    sup.push_back(t > tau ? 0.7 * std::pow(t - tau, -0.5) : 1.0);
  }
  const LineFit fit = decay_fit(times, sup, tau, 1.0, 100.0);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-3));
  CHECK(fit.n == 41);
  CHECK_THROWS(decay_fit(times, sup, tau, 1.0, 500.0));
  CHECK_THROWS(decay_fit(times, sup, tau, 0.0, 10.0));
}

TEST_CASE("grid policy") {
  PhysParams p;
  const ShearProfile u = make_profile("sine", {}, 2.0 * std::numbers::pi);
  GridPolicy pol;
  const Grid2D per = make_grid(pol, 2.0, 10.0, u, p, 50.0);
  CHECK(per.bc_x == BoundaryX::Periodic);
  CHECK(per.X == doctest::Approx(16.0));
  CHECK(per.dx() <= 2.0 / 16.0 + 1e-12);
  CHECK(per.ny >= 16);
  CHECK(per.ly == doctest::Approx(2.0 * std::numbers::pi));

  const Grid2D wide = make_grid(pol, 40.0, 10.0, u, p, 50.0);
  CHECK(wide.dx() <= 0.5 + 1e-12);  // dx_max caps L / cells_per_L

  pol.bc_x = BoundaryX::Absorbing;
  const Grid2D abs = make_grid(pol, 2.0, 10.0, u, p, 50.0);
  CHECK(abs.X >= 2.0 + 10.0 * 50.0 + 8.0 * std::sqrt(50.0) - 1e-9);
  pol.X_max = 100.0;
  CHECK(make_grid(pol, 2.0, 10.0, u, p, 50.0).X <= 100.0 + abs.dx());
  pol.X_override = 30.0;
  CHECK(make_grid(pol, 2.0, 10.0, u, p, 50.0).X == doctest::Approx(30.0).epsilon(0.01));
  CHECK_THROWS(make_grid(pol, 0.0, 10.0, u, p, 50.0));
}

TEST_CASE("narrow slabs quench and wide ones persist without flow") {
  QuenchProblem q = sine_problem(20.0);
  CHECK(quench_predicate(q, 0.1, 0.0).quenched);
  CHECK_FALSE(quench_predicate(q, 20.0, 0.0).quenched);
}

TEST_CASE("periodic quench implies absorbing quench") {
  QuenchProblem per = sine_problem(50.0);
  QuenchProblem abs = per;
  abs.grid.bc_x = BoundaryX::Absorbing;
  int periodic_quenches = 0;
  for (auto [L, A] : {std::pair{2.0, 2.0}, std::pair{1.0, 8.0}, std::pair{2.0, 20.0}}) {
    const bool pq = quench_predicate(per, L, A).quenched;
    const bool aq = quench_predicate(abs, L, A).quenched;
    periodic_quenches += pq;
    CHECK((!pq || aq));
  }
  CHECK(periodic_quenches == 2);  // one case on each side
}

TEST_CASE("critical amplitude bracket") {
  QuenchProblem q = sine_problem(50.0);
  CHECK_THROWS(critical_amplitude(1.0, q, 0.0));
  QuenchProblem short_run = q;
  short_run.horizon = 10.0;
  CHECK_THROWS(critical_amplitude(1.0, short_run, 0.1));

  const CriticalAmplitude tiny = critical_amplitude(0.1, q, 0.1);
  CHECK(tiny.found);
  CHECK(tiny.A_high == 0.0);
  CHECK(tiny.iterations == 0);

  const CriticalAmplitude c = critical_amplitude(2.0, q, 0.05);
  REQUIRE(c.found);
  CHECK(c.A_low > 0.0);
  CHECK(c.A_high / c.A_low <= 1.05 + 1e-12);
  CHECK(c.bracket_verified);
  CHECK(c.monotone_verified);
  CHECK_FALSE(quench_predicate(q, 2.0, c.A_low).quenched);
  CHECK(quench_predicate(q, 2.0, c.A_high).quenched);

  // Starting the search elsewhere lands in the same place.
  const CriticalAmplitude c2 = critical_amplitude(2.0, q, 0.05, 50.0 * c.A_high);
  CHECK(c2.A_high == doctest::Approx(c.A_high).epsilon(0.06));

  const CriticalAmplitude capped = critical_amplitude(2.0, q, 0.05, 0.0, 0.5 * c.A_low);
  CHECK_FALSE(capped.found);
  CHECK(capped.A_high == kInf);
}

TEST_CASE("max quenchable L inverts the critical amplitude") {
  QuenchProblem q = sine_problem(50.0);
  const CriticalAmplitude c = critical_amplitude(2.0, q, 0.05);
  REQUIRE(c.found);
  const double A = 1.2 * c.A_high;
  const MaxQuenchable m = max_quenchable_L(A, q, 0.05, 1.0);
  REQUIRE(m.found);
  CHECK(m.L_low >= 2.0 * 0.8);
  CHECK(m.L_A == doctest::Approx(2.0).epsilon(0.3));
  CHECK_THROWS(max_quenchable_L(A, q, 0.05, 0.0));
}

TEST_CASE("strong quenching fit") {
  const LinearityReport lin = strong_quench_fit({{8.0, 16.0}, {1.0, 2.0}, {2.0, 4.0}, {4.0, 8.0}});
  CHECK(lin.accepted);
  CHECK(lin.C == doctest::Approx(2.0));
  CHECK(lin.loglog.slope == doctest::Approx(1.0));
  REQUIRE(lin.adjacent_ratios.size() == 3);
  for (double r : lin.adjacent_ratios) CHECK(r == doctest::Approx(2.0));

  const LinearityReport inf = strong_quench_fit({{1.0, 2.0}, {2.0, 4.0}, {4.0, kInf}, {8.0, 16.0}});
  CHECK_FALSE(inf.accepted);
  CHECK(inf.reason.find("L=4") != std::string::npos);

  CHECK_THROWS(strong_quench_fit({{1.0, 2.0}, {2.0, 4.0}, {4.0, 8.0}}));
  CHECK_THROWS(strong_quench_fit({{1.0, 2.0}, {2.0, 4.0}, {3.0, 8.0}, {4.0, 9.0}}));
}
