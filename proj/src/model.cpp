#include "shearq/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace shearq {

namespace {

// 10-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 5> kGLx = {0.1488743389816312, 0.4333953941292472,
                                        0.6794095682990244, 0.8650633666889845,
                                        0.9739065285171717};
constexpr std::array<double, 5> kGLw = {0.2955242247147529, 0.2692667193099963,
                                        0.2190863625159820, 0.1494513491505806,
                                        0.0666713443086881};

double gauss_legendre(const std::function<double(double)>& g, double a, double b, int pieces) {
  double total = 0.0;
  const double w = (b - a) / pieces;
  for (int k = 0; k < pieces; ++k) {
    const double mid = a + (k + 0.5) * w;
    const double half = 0.5 * w;
    double s = 0.0;
    for (std::size_t i = 0; i < kGLx.size(); ++i) {
      s += kGLw[i] * (g(mid - half * kGLx[i]) + g(mid + half * kGLx[i]));
    }
    total += s * half;
  }
  return total;
}

double max_slope(const IgnitionReaction& f, int n) {
  double d = 0.0;
  double prev = f(0.0);
  for (int i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    const double cur = f(t);
    d = std::max(d, std::abs(cur - prev) * n);
    prev = cur;
  }
  return d;
}

}  // namespace

double PhysParams::laminar() const { return std::sqrt(kappa / bigM); }

void PhysParams::validate() const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("kappa must be > 0");
  if (!(bigM > 0.0) || !std::isfinite(bigM)) throw std::invalid_argument("M must be > 0");
  if (!(theta0 > 0.0 && theta0 < 1.0)) throw std::invalid_argument("theta0 must lie in (0,1)");
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("h must be > 0");
}

double IgnitionReaction::integral(double a, double b) const {
  if (a > b) return -integral(b, a);
  switch (family_) {
    case ReactionFamily::Zero:
      return 0.0;
    case ReactionFamily::QuadraticIgnition:
    case ReactionFamily::CubicIgnition: {
      const double lo = std::max(a, theta0_) - theta0_;
      const double hi = b - theta0_;
      if (hi <= lo) return 0.0;
      const double c = 1.0 - theta0_;
      const double width = hi - lo;
      if (family_ == ReactionFamily::QuadraticIgnition) {
        return scale_ * width * (c * (hi + lo) / 2.0 - (hi * hi + hi * lo + lo * lo) / 3.0);
      }
      return scale_ * width *
             (c * (hi * hi + hi * lo + lo * lo) / 3.0 - (hi + lo) * (hi * hi + lo * lo) / 4.0);
    }
    case ReactionFamily::Custom: {
      // Split at the cutoff so the kink does not spoil the quadrature order.
      if (a < theta0_ && b > theta0_) {
        return gauss_legendre(custom_, a, theta0_, 16) + gauss_legendre(custom_, theta0_, b, 16);
      }
      return gauss_legendre(custom_, a, b, 16);
    }
  }
  return 0.0;
}

std::string ReactionReport::first_violation() const {
  if (endpoints != 0.0) return "f(0)=f(1)=0";
  if (cutoff != 0.0) return "f=0 on [0,theta0]";
  if (nonnegative != 0.0) return "f>=0 on (theta0,1)";
  if (upper_bound != 0.0) return "f(T)<=T";
  return {};
}

IgnitionReaction build_reaction(const std::string& family, double theta0,
                                const std::vector<double>& params) {
  if (!(theta0 > 0.0 && theta0 < 1.0)) throw ReactionError("theta0 must lie in (0,1)");
  IgnitionReaction r;
  r.theta0_ = theta0;
  r.params_ = params;
  r.name_ = family;
  if (family == "quadratic-ignition" || family == "cubic-ignition") {
    r.family_ = family == "quadratic-ignition" ? ReactionFamily::QuadraticIgnition
                                               : ReactionFamily::CubicIgnition;
    if (params.size() > 1) throw ReactionError(family + " takes at most one parameter (scale)");
    r.scale_ = params.empty() ? 1.0 : params[0];
    if (!(r.scale_ > 0.0)) throw ReactionError(family + " scale must be > 0");
  } else if (family == "zero") {
    r.family_ = ReactionFamily::Zero;
  } else {
    throw ReactionError("unknown reaction family '" + family + "'");
  }
  const ReactionReport rep = validate_reaction(r, 10000);
  if (!rep.valid()) {
    std::ostringstream msg;
    msg << "reaction '" << family << "' violates " << rep.first_violation();
    throw ReactionError(msg.str());
  }
  r.lipschitz_ = rep.lipschitz;
  return r;
}

IgnitionReaction make_custom_reaction(double theta0, std::function<double(double)> f,
                                      std::string name) {
  IgnitionReaction r;
  r.family_ = ReactionFamily::Custom;
  r.name_ = std::move(name);
  r.theta0_ = theta0;
  r.custom_ = std::move(f);
  r.lipschitz_ = max_slope(r, 10000);
  return r;
}

ReactionReport validate_reaction(const IgnitionReaction& f, int n_grid) {
  if (n_grid < 2) throw std::invalid_argument("validate_reaction needs n_grid >= 2");
  ReactionReport rep;
  rep.endpoints = std::abs(f(0.0)) + std::abs(f(1.0));
  const double th = f.theta0();
  for (int i = 0; i < n_grid; ++i) {
    const double t = static_cast<double>(i) / (n_grid - 1);
    const double v = f(t);
    if (t <= th) {
      rep.cutoff = std::max(rep.cutoff, std::abs(v));
    } else if (t < 1.0) {
      rep.nonnegative = std::max(rep.nonnegative, -v);
    }
    rep.upper_bound = std::max(rep.upper_bound, v - t);
  }
  // A grid may straddle the cutoff; probe it and its midpoint explicitly.
  rep.cutoff = std::max({rep.cutoff, std::abs(f(th)), std::abs(f(0.5 * th))});
  rep.lipschitz = max_slope(f, n_grid - 1);
  return rep;
}

void InitialData::validate() const {
  if (!(L > 0.0)) throw std::invalid_argument("initial half-width L must be > 0");
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("initial level eta must lie in (0,1]");
  if (shape == InitialShape::Ramped && !(ramp > 0.0)) {
    throw std::invalid_argument("ramped initial data needs ramp > 0");
  }
}

double InitialData::value(double x) const {
  const double ax = std::abs(x);
  if (ax <= L) return eta;
  if (shape == InitialShape::Ramped && ax < L + ramp) return eta * (L + ramp - ax) / ramp;
  return 0.0;
}

double InitialData::cell_average(double x, double dx) const {
  // Primitive of the (even) profile, G(s) = integral over [0, s] for s >= 0.
  auto primitive = [&](double s) {
    const double a = std::abs(s);
    double g;
    if (a <= L) {
      g = eta * a;
    } else if (shape == InitialShape::Ramped) {
      const double r = std::min(a, L + ramp) - L;
      g = eta * L + eta * (r - r * r / (2.0 * ramp));
    } else {
      g = eta * L;
    }
    return s < 0.0 ? -g : g;
  };
  return (primitive(x + 0.5 * dx) - primitive(x - 0.5 * dx)) / dx;
}

}  // namespace shearq
