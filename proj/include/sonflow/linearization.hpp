#pragma once

// Linearized flow X' = -(scale/2)(Theta0^T X + X Theta0) at an equilibrium,
// assembled on the skew coordinates of X = Omega Theta0.

#include "sonflow/critical_set.hpp"
#include "sonflow/manifold.hpp"

namespace sonflow {

inline constexpr double kSpectrumThreshold = 1e-8;

enum class StabilityVerdict { ExponentiallyStable, Saddle, Degenerate };

const char* to_string(StabilityVerdict v) noexcept;

struct LinearizationReport {
  CriticalPointInfo base;
  double scale = 1.0;
  Matrix operator_matrix;
  Vector eigenvalues;  // ascending
  int n_stable = 0;
  int n_unstable = 0;
  int n_zero = 0;
  StabilityVerdict verdict = StabilityVerdict::Degenerate;
};

/// Ambient action of the linearized operator on X in T_{Theta0} SO(n).
Matrix apply_linearization(const Matrix& theta0, const Matrix& x, double scale);

/// Throws Error(NotCritical) when info.theta is not an equilibrium.
LinearizationReport linearize(const CriticalPointInfo& info, double scale);

/// X = U Theta0 with U = v1 v2^T - v2 v1^T for two -1 eigenvectors v1, v2 of
/// Theta0. Throws Error(NoNegativePair) when k = 0.
TangentVector unstable_direction(const CriticalPointInfo& info);

/// max |(-L_{scale=1}) - H| entrywise, in the orthonormal skew basis.
double hessian_linearization_consistency(const CriticalPointInfo& info);

}  // namespace sonflow
