#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

namespace shearq {

namespace detail {

// Gauss-Kronrod 7/15 nodes on [0, 1] (symmetric half).
inline constexpr std::array<double, 8> kXgk = {0.991455371120812639, 0.949107912342758525,
                                               0.864864423359769073, 0.741531185599394440,
                                               0.586087235467691130, 0.405845151377397167,
                                               0.207784955007898468, 0.0};
inline constexpr std::array<double, 8> kWgk = {0.022935322010529225, 0.063092092629978553,
                                               0.104790010322250184, 0.140653259715525919,
                                               0.169004726639267903, 0.190350578064785410,
                                               0.204432940075298892, 0.209482141084727828};
inline constexpr std::array<double, 4> kWg = {0.129484966168869693, 0.279705391489276668,
                                              0.381830050505118945, 0.417959183673469388};

template <typename F>
std::pair<double, double> gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double k = fc * kWgk[7];
  double g = fc * kWg[3];
  for (int i = 0; i < 7; ++i) {
    const double d = h * kXgk[static_cast<std::size_t>(i)];
    const double s = f(c - d) + f(c + d);
    k += kWgk[static_cast<std::size_t>(i)] * s;
    if (i % 2 == 1) g += kWg[static_cast<std::size_t>(i / 2)] * s;
  }
  return {k * h, std::abs((k - g) * h)};
}

template <typename F>
double gk_adapt(F& f, double a, double b, double tol, int depth, double& err) {
  auto [val, e] = gk15(f, a, b);
  if (e <= tol || depth <= 0) {
    err += e;
    return val;
  }
  const double m = 0.5 * (a + b);
  return gk_adapt(f, a, m, 0.5 * tol, depth - 1, err) + gk_adapt(f, m, b, 0.5 * tol, depth - 1, err);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (7/15) quadrature. Nodes never touch the endpoints,
/// so integrable endpoint singularities are tolerated.
template <typename F>
double integrate_adaptive(F f, double a, double b, double tol, double* err_out = nullptr,
                          int max_depth = 40) {
  double err = 0.0;
  const double v = detail::gk_adapt(f, a, b, tol, max_depth, err);
  if (err_out != nullptr) *err_out = err;
  return v;
}

/// Golden-section search for a minimum of a unimodal f on [a, b].
template <typename F>
std::pair<double, double> golden_section_min(F f, double a, double b, double xtol) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > xtol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? std::make_pair(c, fc) : std::make_pair(d, fd);
}

/// Adaptive Dormand-Prince 5(4) integration of y' = rhs(t, y) from t0 until
/// stop(t, y) changes sign from positive to non-positive; the crossing is
/// located by bisection on the dense (cubic Hermite) output. Returns (t*, y*).
template <typename Vec, typename Rhs, typename Stop>
std::pair<double, Vec> dopri_until(Rhs rhs, Stop stop, double t0, Vec y0, double h0, double rtol,
                                   double atol, double t_limit) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  double t = t0, h = h0;
  Vec y = y0;
  Vec k1 = rhs(t, y);
  double s_prev = stop(t, y);
  while (t < t_limit) {
    h = std::min(h, t_limit - t);
    const Vec k2 = rhs(t + c2 * h, (y + h * a21 * k1).eval());
    const Vec k3 = rhs(t + c3 * h, (y + h * (a31 * k1 + a32 * k2)).eval());
    const Vec k4 = rhs(t + c4 * h, (y + h * (a41 * k1 + a42 * k2 + a43 * k3)).eval());
    const Vec k5 = rhs(t + c5 * h, (y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)).eval());
    const Vec k6 =
        rhs(t + h, (y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)).eval());
    const Vec yn = (y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6)).eval();
    const Vec k7 = rhs(t + h, yn);
    const Vec errv = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const Vec scale = (atol + rtol * y.array().abs().max(yn.array().abs())).matrix();
    const double err = (errv.array() / scale.array()).abs().maxCoeff();
    if (err <= 1.0) {
      const double s_new = stop(t + h, yn);
      if (s_prev > 0.0 && s_new <= 0.0) {
        // Hermite interpolant on [t, t + h] between (y, k1) and (yn, k7).
        auto dense = [&](double th) {
          const double th2 = th * th, th3 = th2 * th;
          return ((2 * th3 - 3 * th2 + 1) * y + (th3 - 2 * th2 + th) * h * k1 +
                  (-2 * th3 + 3 * th2) * yn + (th3 - th2) * h * k7)
              .eval();
        };
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 80; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (stop(t + mid * h, dense(mid)) > 0.0) lo = mid; else hi = mid;
        }
        return {t + hi * h, dense(hi)};
      }
      t += h;
      y = yn;
      k1 = k7;
      s_prev = s_new;
    }
    const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= fac;
  }
  throw std::runtime_error("dopri_until: stop condition not reached before t_limit");
}

}  // namespace shearq
