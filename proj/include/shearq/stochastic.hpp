#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "shearq/model.hpp"
#include "shearq/profiles.hpp"

namespace shearq {

/// Philox4x32-10 counter-based generator.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Standard normals for one path, addressed by (seed, path, index): the k-th
/// normal does not depend on how many others were drawn or on which thread.
class PathNormals {
 public:
  PathNormals(std::uint64_t seed, std::uint64_t path) : seed_(seed), path_(path) {}
  /// k-th normal of the path (Box-Muller on one Philox block per pair).
  double operator()(std::uint64_t k);

 private:
  std::uint64_t seed_, path_;
  std::uint64_t cached_block_ = ~std::uint64_t{0};
  double cache_[2] = {0.0, 0.0};
};

struct PathEnsembleConfig {
  long n_paths = 10000;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  int threads = 1;
  void validate() const;
};

struct MCEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;  ///< sample sd / sqrt(n)
  long n = 0;
  std::uint64_t seed = 0;
  double dt = 0.0;
};

/// Mean and standard error of per-path values, reduced by pairwise summation.
MCEstimate summarize(const std::vector<double>& values, std::uint64_t seed, double dt);

/// Per-path integrals of g(W_s) over [0, S] with W_0 = y (trapezoid rule on
/// exact Gaussian increments, S / dt rounded up to whole steps).
std::vector<double> path_integrals(const ShearProfile& u, double y, double S,
                                   const PathEnsembleConfig& cfg);

/// Psi(t, x, y) = P(x - (A / 2 kappa) * integral_0^{2 kappa t} u(W_s^y) ds in [-L, L]).
MCEstimate estimate_psi_mc(double t, double x, double y, double A, double L, const ShearProfile& u,
                           const PhysParams& params, const PathEnsembleConfig& cfg);

/// Same estimate at several x, sharing the paths.
std::vector<MCEstimate> estimate_psi_mc_batch(double t, const std::vector<double>& xs, double y,
                                              double A, double L, const ShearProfile& u,
                                              const PhysParams& params,
                                              const PathEnsembleConfig& cfg);

/// P(W_s^{y0} in [lo, hi] for all s in [0, t]); each path carries the product
/// of per-step Brownian-bridge survival probabilities.
MCEstimate estimate_plateau_occupancy(double y0, double lo, double hi, double t,
                                      const PathEnsembleConfig& cfg);

/// P(integral_0^t u(W_s^y) ds in [a, a + eps]).
MCEstimate estimate_anticoncentration(double t, double y, double a, double eps, const ShearProfile& u,
                                      const PathEnsembleConfig& cfg);

/// Anti-concentration estimates for a grid of (a, eps) at one y, sharing the paths.
/// Result (i, k) belongs to as[i], epss[k].
Eigen::ArrayXXd anticoncentration_grid(double t, double y, const std::vector<double>& as,
                                       const std::vector<double>& epss, const ShearProfile& u,
                                       const PathEnsembleConfig& cfg);

/// Tabulated v (v' = u, mean zero) and z (z' = v, z(0) = 0) on n nodes of one
/// period, with cubic Hermite evaluation between nodes.
struct Antiderivatives {
  double h = 0.0;
  int n = 0;
  Eigen::ArrayXd u_nodes, v_nodes, z_nodes;
  double c = 0.0;             ///< max |z|
  double v_defect = 0.0;      ///< |v(h) - v(0)| / max|v| before wrap
  double z_defect = 0.0;      ///< |z(h) - z(0)| / max|z| before wrap
  double v(double y) const;
  double z(double y) const;
  double sigma2() const;      ///< (1/h) integral of v^2
};

Antiderivatives build_antiderivatives(const ShearProfile& u, int n = 4096);

/// One Brownian path on a uniform step, W_0 = y.
struct BrownianPath {
  double dt = 0.0;
  std::vector<double> w;  ///< w[0] = y, w[k] = W_{k dt}
  /// Path on a step coarser by an integer factor (same underlying motion).
  BrownianPath coarsen(int factor) const;
};

BrownianPath sample_path(double y, double horizon, double dt, std::uint64_t seed, std::uint64_t path);

struct ItoResidual {
  double lhs = 0.0;       ///< (1/alpha) sum u(W_k) dt
  double rhs = 0.0;       ///< (2/alpha)(z(W_end) - z(y)) - (2/alpha) sum v(W_k) dW_k
  double residual = 0.0;  ///< lhs - rhs
  double max_abs_v = 0.0; ///< max |v| along the path
};

/// Compares the time integral of u with its Ito representation on one path
/// covering [0, alpha^2].
ItoResidual ito_residual(double alpha, const BrownianPath& path, const ShearProfile& u,
                         const Antiderivatives& ad);

struct CltReport {
  std::vector<double> samples;  ///< (1/alpha) sum v(W_k) dW_k
  double sigma2 = 0.0;          ///< (1/h) integral of v^2
  double ks = 0.0;              ///< KS distance to Normal(0, sigma2)
  double sample_var = 0.0;
  bool degenerate = false;      ///< sigma2 == 0: KS test skipped
  std::string note;
};

/// Samples of (1/alpha) integral_0^{alpha^2} v(W_s) dW_s with W_0 = y.
CltReport martingale_clt_sample(double y, double alpha, const ShearProfile& u,
                                const PathEnsembleConfig& cfg, double alpha_min = 8.0);

/// JSON record {op, inputs, mean, stderr, n, seed, dt}.
std::string estimate_json(const std::string& op, const std::string& inputs_json, const MCEstimate& e);

/// Single-column CSV of samples.
std::string samples_csv(const std::string& column, const std::vector<double>& samples);

}  // namespace shearq
