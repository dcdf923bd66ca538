#pragma once

// Types and primitive operations on SO(n): rotation and skew matrices,
// tangent vectors X = Omega * Theta, the trace metric, exp/log and sampling.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sonflow/error.hpp"

namespace sonflow {

namespace detail {
struct RotationAccess;
}

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultOrthoTol = 1e-10;

/// An n x n matrix admitted to SO(n): ||Theta^T Theta - I||_F <= ortho_tol and
/// det(Theta) >= 0.5. Immutable after construction.
class RotationMatrix {
 public:
  /// Throws Error(NotOnGroup) when the admission test fails.
  explicit RotationMatrix(Matrix entries, double ortho_tol = kDefaultOrthoTol);

  static RotationMatrix identity(int n);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Matrix& matrix() const { return entries_; }
  double ortho_tol() const { return ortho_tol_; }

  /// ||Theta^T Theta - I||_F.
  double orthogonality_defect() const;

 private:
  friend struct detail::RotationAccess;
  struct Unchecked {};
  RotationMatrix(Unchecked, Matrix entries, double ortho_tol)
      : entries_(std::move(entries)), ortho_tol_(ortho_tol) {}

  Matrix entries_;
  double ortho_tol_;
};

/// ||M^T M - I||_F for any square M.
double orthogonality_defect(const Matrix& m);

/// Real skew-symmetric matrix, ||Omega + Omega^T||_F <= 1e-12 max(1, ||Omega||_F).
class SkewMatrix {
 public:
  explicit SkewMatrix(Matrix entries);

  static SkewMatrix zero(int n);
  /// Takes the skew part (M - M^T)/2; never throws on a square input.
  static SkewMatrix from_skew_part(const Matrix& m);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Matrix& matrix() const { return entries_; }

  SkewMatrix operator-() const { return SkewMatrix(-entries_); }

 private:
  Matrix entries_;
};

SkewMatrix operator*(double s, const SkewMatrix& omega);
SkewMatrix operator+(const SkewMatrix& a, const SkewMatrix& b);

/// The tangent vector X = coord * base at base.
class TangentVector {
 public:
  TangentVector(RotationMatrix base, SkewMatrix coord);

  const RotationMatrix& base() const { return base_; }
  const SkewMatrix& coord() const { return coord_; }
  /// Ambient representative X = Omega * Theta.
  Matrix ambient() const { return coord_.matrix() * base_.matrix(); }
  /// Metric norm sqrt(tr(Omega^T Omega)).
  double norm() const { return coord_.matrix().norm(); }

 private:
  RotationMatrix base_;
  SkewMatrix coord_;
};

/// Closest rotation in Frobenius norm (polar factor with det repair).
/// Throws Error(SingularInput) when sigma_min < 1e-12 * ||M||_2.
RotationMatrix project_to_group(const Matrix& m, double ortho_tol = kDefaultOrthoTol);

/// tr(Omega_X^T Omega_Y). Throws Error(BaseMismatch) unless the bases agree
/// to 1e-12.
double metric(const TangentVector& x, const TangentVector& y);

/// Matrix exponential by scaling and squaring with a diagonal Pade core.
Matrix expm(const Matrix& a);

RotationMatrix group_exp(const SkewMatrix& omega);

/// Real skew logarithm through the real Schur form. Eigenvalue pairs at -1
/// become angle-pi blocks, so the result exists for every rotation.
SkewMatrix group_log(const RotationMatrix& theta);

/// Haar-distributed rotation; deterministic in (n, seed).
RotationMatrix haar_sample(int n, std::uint64_t seed);

/// Standard-normal strictly-upper entries, antisymmetrized.
TangentVector random_tangent(const RotationMatrix& theta, std::uint64_t seed);

/// Mixes a stream index into a base seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Skew coordinates. The basis (E_kl - E_lk)/sqrt(2), k < l, in row-major
// order of (k, l) is orthonormal under the trace metric.
int skew_dimension(int n);
std::vector<Matrix> skew_basis(int n);
Vector skew_to_coords(const Matrix& omega);
Matrix coords_to_skew(const Vector& coords, int n);

}  // namespace sonflow
