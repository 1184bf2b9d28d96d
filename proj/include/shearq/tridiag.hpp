#pragma once

#include <Eigen/Core>
#include <cassert>

namespace shearq {

/// Symmetric tridiagonal system with constant off-diagonal -a and diagonal
/// 1 + 2a, either with zero Dirichlet ends or cyclic (periodic) closure.
/// The factorization is stored once; solves run on columns of an array, or
/// on whole columns at once along the second index.
template <typename Scalar>
class ConstTridiag {
 public:
  using Vec = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  ConstTridiag() = default;
  ConstTridiag(Eigen::Index n, Scalar a, bool periodic) { factor(n, a, periodic); }

  void factor(Eigen::Index n, Scalar a, bool periodic) {
    assert(n >= 3);
    n_ = n;
    a_ = a;
    periodic_ = periodic;
    Vec diag = Vec::Constant(n, Scalar(1) + 2 * a);
    if (periodic) {
      // Sherman-Morrison: gamma = -b0, corners alpha = beta = -a.
      const Scalar b0 = Scalar(1) + 2 * a;
      gamma_ = -b0;
      diag(0) = b0 - gamma_;
      diag(n - 1) = b0 - a * a / gamma_;
    }
    cp_.resize(n);
    inv_.resize(n);
    inv_(0) = Scalar(1) / diag(0);
    cp_(0) = -a * inv_(0);
    for (Eigen::Index i = 1; i < n; ++i) {
      inv_(i) = Scalar(1) / (diag(i) + a * cp_(i - 1));
      cp_(i) = -a * inv_(i);
    }
    if (periodic) {
      Vec u = Vec::Zero(n);
      u(0) = gamma_;
      u(n - 1) = -a;
      z_ = u;
      solve_base(z_.data(), 1);
      ratio_ = -a / gamma_;
      denom_ = Scalar(1) + z_(0) + ratio_ * z_(n - 1);
    }
  }

  Eigen::Index size() const { return n_; }
  Scalar a() const { return a_; }
  bool periodic() const { return periodic_; }

  /// Solves in place on a strided vector of length n.
  void solve(Scalar* x, Eigen::Index stride = 1) const {
    solve_base(x, stride);
    if (periodic_) {
      const Scalar f = (x[0] + ratio_ * x[(n_ - 1) * stride]) / denom_;
      for (Eigen::Index i = 0; i < n_; ++i) x[i * stride] -= f * z_(i);
    }
  }

  /// Solves along the column index of m (one system per row), vectorized
  /// across rows.
  template <typename Derived>
  void solve_columns(Eigen::ArrayBase<Derived>& m) const {
    auto& d = m.derived();
    assert(d.cols() == n_);
    d.col(0) *= inv_(0);
    for (Eigen::Index j = 1; j < n_; ++j) d.col(j) = (d.col(j) + a_ * d.col(j - 1)) * inv_(j);
    for (Eigen::Index j = n_ - 2; j >= 0; --j) d.col(j) -= cp_(j) * d.col(j + 1);
    if (periodic_) {
      const auto f = ((d.col(0) + ratio_ * d.col(n_ - 1)) / denom_).eval();
      for (Eigen::Index j = 0; j < n_; ++j) d.col(j) -= z_(j) * f;
    }
  }

  /// Explicit half of Crank-Nicolson: y = (I + a D2) x along a strided vector.
  static void apply_explicit(const Scalar* x, Scalar* y, Eigen::Index n, Scalar a, bool periodic,
                             Eigen::Index stride = 1) {
    const Scalar c = Scalar(1) - 2 * a;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Scalar left = i > 0 ? x[(i - 1) * stride] : (periodic ? x[(n - 1) * stride] : Scalar(0));
      const Scalar right =
          i + 1 < n ? x[(i + 1) * stride] : (periodic ? x[0] : Scalar(0));
      y[i * stride] = c * x[i * stride] + a * (left + right);
    }
  }

 private:
  void solve_base(Scalar* x, Eigen::Index stride) const {
    x[0] *= inv_(0);
    for (Eigen::Index i = 1; i < n_; ++i) {
      x[i * stride] = (x[i * stride] + a_ * x[(i - 1) * stride]) * inv_(i);
    }
    for (Eigen::Index i = n_ - 2; i >= 0; --i) x[i * stride] -= cp_(i) * x[(i + 1) * stride];
  }

  Eigen::Index n_ = 0;
  Scalar a_ = 0;
  bool periodic_ = false;
  Scalar gamma_ = 0, ratio_ = 0, denom_ = 1;
  Vec cp_, inv_, z_;
};

}  // namespace shearq
