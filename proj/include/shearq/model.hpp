#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace shearq {

/// Physical constants of the reactive strip. Lengths are measured in the same
/// unit as h, times in the unit of 1/bigM.
struct PhysParams {
  double kappa = 1.0;   ///< thermal diffusivity
  double bigM = 1.0;    ///< reaction strength
  double theta0 = 0.25; ///< ignition temperature
  double h = 6.283185307179586;

  /// Laminar front width sqrt(kappa / M).
  double laminar() const;
  void validate() const;
};

class ReactionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ReactionFamily { QuadraticIgnition, CubicIgnition, Zero, Custom };

/// Ignition-type nonlinearity f with cutoff theta0.
///
/// Evaluation is pure. Built-in families carry closed-form antiderivatives;
/// custom callables fall back to Gauss-Legendre quadrature.
class IgnitionReaction {
 public:
  IgnitionReaction() = default;

  double operator()(double T) const {
    switch (family_) {
      case ReactionFamily::QuadraticIgnition:
        return T > theta0_ ? scale_ * (T - theta0_) * (1.0 - T) : 0.0;
      case ReactionFamily::CubicIgnition:
        return T > theta0_ ? scale_ * (T - theta0_) * (T - theta0_) * (1.0 - T) : 0.0;
      case ReactionFamily::Zero:
        return 0.0;
      case ReactionFamily::Custom:
        return custom_(T);
    }
    return 0.0;
  }

  /// F(s) = integral of f over [0, s].
  double antiderivative(double s) const { return integral(0.0, s); }
  /// Integral of f over [a, b], computed without cancellation when a ~ b.
  double integral(double a, double b) const;

  double theta0() const { return theta0_; }
  double lipschitz() const { return lipschitz_; }
  ReactionFamily family_tag() const { return family_; }
  const std::string& family() const { return name_; }
  const std::vector<double>& params() const { return params_; }
  bool is_zero() const { return family_ == ReactionFamily::Zero; }

  friend IgnitionReaction build_reaction(const std::string& family, double theta0,
                                         const std::vector<double>& params);
  friend IgnitionReaction make_custom_reaction(double theta0, std::function<double(double)> f,
                                               std::string name);

 private:
  ReactionFamily family_ = ReactionFamily::Zero;
  std::string name_ = "zero";
  double theta0_ = 0.25;
  double scale_ = 1.0;
  std::vector<double> params_;
  double lipschitz_ = 0.0;
  std::function<double(double)> custom_;
};

/// Maximum violation of each ignition clause on a uniform grid of [0,1].
struct ReactionReport {
  double endpoints = 0.0;    ///< |f(0)| + |f(1)|
  double cutoff = 0.0;       ///< max |f| on [0, theta0]
  double nonnegative = 0.0;  ///< max (-f) on (theta0, 1)
  double upper_bound = 0.0;  ///< max (f(T) - T)
  double lipschitz = 0.0;    ///< max finite-difference slope
  bool valid() const {
    return endpoints == 0.0 && cutoff == 0.0 && nonnegative == 0.0 && upper_bound == 0.0;
  }
  /// Name of the first violated clause, empty when valid.
  std::string first_violation() const;
};

/// Builds a validated reaction. Known families: "quadratic-ignition"
/// (f = k max(0, T - theta0)(1 - T), params [k], default k = 1),
/// "cubic-ignition" (f = k max(0, T - theta0)^2 (1 - T)) and "zero".
IgnitionReaction build_reaction(const std::string& family, double theta0,
                                const std::vector<double>& params = {});

/// Wraps an arbitrary callable without validating it; pair with validate_reaction.
IgnitionReaction make_custom_reaction(double theta0, std::function<double(double)> f,
                                      std::string name = "custom");

ReactionReport validate_reaction(const IgnitionReaction& f, int n_grid);

enum class InitialShape { Sharp, Ramped };

/// Hot slab T0 = eta on |x| <= L, independent of y.
struct InitialData {
  double L = 1.0;
  double eta = 1.0;
  InitialShape shape = InitialShape::Sharp;
  double ramp = 0.0;  ///< ramp width for InitialShape::Ramped

  /// eta may sit at or below theta0; such data is trivially quenched.
  void validate() const;
  /// Point value of the initial temperature profile.
  double value(double x) const;
  /// Cell average over [x - dx/2, x + dx/2].
  double cell_average(double x, double dx) const;
  double support_half_width() const { return shape == InitialShape::Ramped ? L + ramp : L; }
};

}  // namespace shearq
