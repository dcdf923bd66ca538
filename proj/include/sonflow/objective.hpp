#pragma once

// The cost f(Theta) = n - tr(Theta) and its first and second order structure.

#include "sonflow/critical_set.hpp"
#include "sonflow/manifold.hpp"

namespace sonflow {

inline constexpr double kCriticalGradTol = 1e-10;
inline constexpr double kKernelThreshold = 1e-8;

/// Hessian bilinear form at a critical point,
///   H(Omega1 Theta0, Omega2 Theta0) = 1/2 tr(Omega1^T Theta0 Omega2 + Omega2^T Theta0 Omega1).
class HessianForm {
 public:
  HessianForm(CriticalPointInfo base, Matrix matrix);

  const CriticalPointInfo& base() const { return base_; }

  /// Representation in the orthonormal skew basis (E_kl - E_lk)/sqrt(2).
  const Matrix& matrix() const { return matrix_; }

  /// Representation in the raw coordinates Omega_kl, k < l (basis E_kl - E_lk).
  /// Equals 2 * matrix().
  Matrix coordinate_matrix() const { return 2.0 * matrix_; }

  double evaluate(const SkewMatrix& omega1, const SkewMatrix& omega2) const;

  /// Eigenvalues of matrix(), ascending.
  Vector eigenvalues() const;

 private:
  CriticalPointInfo base_;
  Matrix matrix_;
};

double cost(const RotationMatrix& theta);

/// -tr(Omega Theta). Throws Error(BaseMismatch) if x is not based at theta.
double differential(const RotationMatrix& theta, const TangentVector& x);

/// (Theta, (Theta - Theta^T)/2), i.e. grad f = 1/2 (Theta - Theta^T) Theta.
TangentVector gradient(const RotationMatrix& theta);

/// Metric norm of the gradient, ||(Theta - Theta^T)/2||_F.
double gradient_norm(const Matrix& theta);

/// Throws Error(NotCritical) when the gradient norm is >= 1e-10.
HessianForm hessian_at(const CriticalPointInfo& info);

/// Number of singular values of form.matrix() below 1e-8.
int hessian_kernel_dimension(const HessianForm& form);

}  // namespace sonflow
