#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "shearq/numerics.hpp"
#include "shearq/parallel.hpp"
#include "shearq/stats.hpp"
#include "shearq/tridiag.hpp"

using namespace shearq;

TEST_CASE("adaptive quadrature") {
  CHECK(integrate_adaptive([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-12) ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
  // integrable endpoint singularity: integral_0^1 x^{-1/2} = 2
  CHECK(integrate_adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-10) ==
        doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("golden section") {
  auto [x, fx] = golden_section_min([](double x) { return (x - 0.3) * (x - 0.3) + 1.0; }, 0.0, 1.0, 1e-10);
  CHECK(x == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(fx == doctest::Approx(1.0));
}

TEST_CASE("Dormand-Prince stops at the sign change") {
  // harmonic oscillator from (0, 1): first zero of y' = cos t is pi / 2
  using V = Eigen::Vector2d;
  auto rhs = [](double, const V& y) { return V(y(1), -y(0)); };
  auto stop = [](double, const V& y) { return y(1); };
  const auto [t, y] = dopri_until<V>(rhs, stop, 0.0, V(0.0, 1.0), 1e-3, 1e-11, 1e-13, 10.0);
  CHECK(t == doctest::Approx(std::numbers::pi / 2).epsilon(1e-9));
  CHECK(y(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS(dopri_until<V>(rhs, [](double, const V&) { return 1.0; }, 0.0, V(0.0, 1.0), 1e-3, 1e-8, 1e-10, 1.0));
}

TEST_CASE("tridiagonal solves match dense LU") {
  for (bool periodic : {false, true}) {
    const int n = 17;
    const double a = 0.7;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      M(i, i) = 1 + 2 * a;
      if (i > 0) M(i, i - 1) = -a;
      if (i + 1 < n) M(i, i + 1) = -a;
    }
    if (periodic) M(0, n - 1) = M(n - 1, 0) = -a;
    Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(n, -1.0, 2.0).array().sin();
    const Eigen::VectorXd ref = M.partialPivLu().solve(b);
    ConstTridiag<double> T(n, a, periodic);
    Eigen::VectorXd x = b;
    T.solve(x.data());
    CHECK((x - ref).cwiseAbs().maxCoeff() < 1e-13);

    Eigen::ArrayXXd cols(3, n);
    for (int r = 0; r < 3; ++r) cols.row(r) = (b.array() * (r + 1)).transpose();
    T.solve_columns(cols);
    for (int r = 0; r < 3; ++r) CHECK((cols.row(r).transpose().matrix() - (r + 1) * ref).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::VectorXd y(n);
    ConstTridiag<double>::apply_explicit(b.data(), y.data(), n, a, periodic);
    Eigen::MatrixXd E = 2.0 * Eigen::MatrixXd::Identity(n, n) - M;
    CHECK((y - E * b).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("least squares and log-log fits") {
  std::vector<double> x{1, 2, 3, 4, 5}, y;
  for (double v : x) y.push_back(3.0 * v - 1.0);
  const LineFit f = ols(x, y);
  CHECK(f.slope == doctest::Approx(3.0));
  CHECK(f.intercept == doctest::Approx(-1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK(f.slope_half_width == doctest::Approx(0.0).epsilon(1e-12));
  std::vector<double> p;
  for (double v : x) p.push_back(2.0 * std::pow(v, -2.0));
  CHECK(loglog_fit(x, p).slope == doctest::Approx(-2.0));
  CHECK_THROWS(loglog_fit({1.0, 2.0, 3.0}, {1.0, -1.0, 2.0}));
}

TEST_CASE("Student t quantiles") {
  CHECK(student_t975(1) == doctest::Approx(12.706).epsilon(1e-4));
  CHECK(student_t975(2) == doctest::Approx(4.303).epsilon(1e-3));
  CHECK(student_t975(10) == doctest::Approx(2.228).epsilon(1e-3));
  CHECK(student_t975(60) == doctest::Approx(2.000).epsilon(2e-3));
  CHECK(student_t975(100000) == doctest::Approx(1.960).epsilon(1e-3));
}

TEST_CASE("Kolmogorov-Smirnov distance") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.96) == doctest::Approx(0.975).epsilon(1e-4));
  // evenly spread quantiles of N(0,1) are at KS distance 1/(2n)
  const int n = 1000;
  std::vector<double> q;
  for (int i = 0; i < n; ++i) {
    const double target = (i + 0.5) / n;
    double lo = -10, hi = 10;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (normal_cdf(mid) < target ? lo : hi) = mid;
    }
    q.push_back(0.5 * (lo + hi));
  }
  CHECK(ks_distance_normal(q, 0.0, 1.0) == doctest::Approx(0.5 / n).epsilon(1e-6));
  // shifted by 3: sup |Phi(x) - Phi(x - 3)| = 2 Phi(1.5) - 1
  CHECK(ks_distance_normal(q, 3.0, 1.0) == doctest::Approx(2.0 * normal_cdf(1.5) - 1.0).epsilon(2e-3));
  const Moments m = moments({1.0, 2.0, 3.0, 4.0});
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS(parallel_for(10, 3, [](std::size_t i) {
    if (i == 7) throw std::runtime_error("boom");
  }));
}
