#pragma once

#include <map>
#include <string>
#include <vector>

namespace shearq {

enum class ProfileKind { Sine, Constant, SineWithPlateau, Sawtooth, Sampled };
enum class Smoothness { C0, C1, Cn };

/// Maximal interval of constancy, in the profile's own y coordinate.
struct Plateau {
  double start = 0.0;
  double length = 0.0;
};

/// Periodic shear profile u(y).
///
/// Internally u(y) = base(alpha * y) - offset, where base has period
/// base_period(). Scaling and mean removal only touch alpha and offset, so
/// plateau metadata stays exact under both.
class ShearProfile {
 public:
  ShearProfile() = default;

  double operator()(double y) const;
  double period() const { return base_period_ / alpha_; }
  double alpha() const { return alpha_; }
  double offset() const { return offset_; }
  double max_abs() const { return max_abs_; }
  ProfileKind kind() const { return kind_; }
  std::string kind_name() const;
  Smoothness smoothness() const { return smoothness_; }
  const std::map<std::string, double>& params() const { return params_; }
  /// Plateaus in y units, sorted by start.
  std::vector<Plateau> plateaus() const;
  /// Samples u at y_j = j * period / n, j = 0..n-1.
  std::vector<double> sample(int n) const;
  /// Samples backing a Sampled profile (before offset), empty otherwise.
  const std::vector<double>& raw_samples() const { return samples_; }
  /// Mean over one period, computed by quadrature adapted to the kind.
  double mean() const;

  friend ShearProfile make_profile(const std::string& kind,
                                   const std::map<std::string, double>& params, double h);
  friend ShearProfile make_sampled_profile(std::vector<double> samples, double h,
                                           Smoothness claimed, double plateau_tol);
  friend ShearProfile normalize_mean_zero(const ShearProfile& p);
  friend ShearProfile scale_profile(const ShearProfile& p, double alpha);
  friend double longest_plateau(const ShearProfile& p, double tol);

 private:
  double base(double s) const;
  void finish();

  ProfileKind kind_ = ProfileKind::Sine;
  Smoothness smoothness_ = Smoothness::Cn;
  std::map<std::string, double> params_;
  double base_period_ = 1.0;
  double alpha_ = 1.0;
  double offset_ = 0.0;
  double max_abs_ = 0.0;
  std::vector<Plateau> base_plateaus_;
  std::vector<double> samples_;

  // sine-with-plateau / sawtooth geometry in base coordinates
  double inner_period_ = 1.0;
  double plat_start_ = 0.0;
  double plat_len_ = 0.0;
  double blend_ = 0.0;
};

/// Closed-form profile zoo.
///
///  - "sine":              amplitude * sin(2 pi y / h)
///  - "constant":          c
///  - "sine-with-plateau": sin(2 pi s / (h - plateau_length)) with a flat piece of
///                         length plateau_length inserted at plateau_position
///                         (default: the crest), joined by C1 cubic blends of
///                         width blend (default h / 50)
///  - "sawtooth":          rises linearly from -1 to 1, then drops back over a
///                         cubic of width smoothing (default h / 10); C1
ShearProfile make_profile(const std::string& kind, const std::map<std::string, double>& params,
                          double h);

/// Profile from uniform samples over one period (no duplicated endpoint),
/// interpolated by a periodic Catmull-Rom cubic.
ShearProfile make_sampled_profile(std::vector<double> samples, double h,
                                  Smoothness claimed = Smoothness::C1, double plateau_tol = -1.0);

/// Reads a two-column (y, u) CSV with a uniform y grid covering one period.
/// The period is inferred as n * dy.
ShearProfile load_profile_csv(const std::string& path);

/// Returns u - mean(u).
ShearProfile normalize_mean_zero(const ShearProfile& p);

/// Returns y -> u(alpha y); period and plateau lengths shrink by alpha.
ShearProfile scale_profile(const ShearProfile& p, double alpha);

/// Length of the longest plateau. Closed-form kinds report their exact
/// metadata; sampled profiles are scanned with the given constancy tolerance
/// (tol <= 0 selects 1e-9 * max|u|).
double longest_plateau(const ShearProfile& p, double tol = -1.0);

/// Maximal constancy runs of periodic samples with spacing dy.
std::vector<Plateau> detect_plateaus(const std::vector<double>& samples, double dy, double tol);

}  // namespace shearq
