#include "sonflow/critical_set.hpp"

#include <cmath>
#include <random>
#include <string>

namespace sonflow {

namespace {

void check_index(int n, int k) {
  if (n < 1 || k < 0 || k > n / 2)
    throw Error(ErrorCode::BadIndex,
                "component index " + std::to_string(k) + " out of range for n=" + std::to_string(n));
}

Vector sign_pattern(int n, int k) {
  Vector d = Vector::Ones(n);
  d.head(2 * k).setConstant(-1.0);
  return d;
}

Matrix conjugate_symmetric(const Matrix& frame, const Vector& signs) {
  Matrix t = frame.transpose() * signs.asDiagonal() * frame;
  // Adding +0.0 clears negative zeros.
  return (0.5 * (t + t.transpose())).array() + 0.0;
}

// Row sign flips leave frame^T D frame unchanged.
Matrix with_positive_det(Matrix frame) {
  if (frame.determinant() < 0.0) frame.row(frame.rows() - 1) *= -1.0;
  return frame;
}

// Rotation Q with Q^T D Q = D, mixing only within the -1 block and within the +1 block.
Matrix random_gauge(const Vector& signs, std::uint64_t seed) {
  const int n = static_cast<int>(signs.size());
  std::vector<int> neg;
  std::vector<int> pos;
  for (int i = 0; i < n; ++i) (signs(i) < 0 ? neg : pos).push_back(i);
  Matrix q = Matrix::Identity(n, n);
  auto fill = [&](const std::vector<int>& idx, std::uint64_t s) {
    const int m = static_cast<int>(idx.size());
    if (m < 2) return;
    const Matrix block = haar_sample(m, s).matrix();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) q(idx[i], idx[j]) = block(i, j);
  };
  fill(neg, derive_seed(seed, 1));
  fill(pos, derive_seed(seed, 2));
  return q;
}

// Skew log of a frame with exp(log) reproducing it to 1e-9; re-gauges on failure.
SkewMatrix frame_log(Matrix& frame, const Vector& signs, std::uint64_t gauge_seed) {
  for (int attempt = 0; attempt < 6; ++attempt) {
    const RotationMatrix rot(frame, 1e-8);
    SkewMatrix omega = group_log(rot);
    if ((expm(omega.matrix()) - frame).norm() <= 1e-9) return omega;
    frame = random_gauge(signs, derive_seed(gauge_seed, static_cast<std::uint64_t>(attempt))) * frame;
  }
  throw Error(ErrorCode::NumericalFailure, "could not take a logarithm of the frame");
}

}  // namespace

CriticalPointInfo make_critical(int n, int k, const Matrix& frame) {
  check_index(n, k);
  if (frame.rows() != n || frame.cols() != n)
    throw Error(ErrorCode::InvalidArgument, "frame has the wrong dimensions");
  if (!(orthogonality_defect(frame) <= 1e-10))
    throw Error(ErrorCode::InvalidArgument, "frame is not orthogonal");
  Matrix pi = with_positive_det(frame);
  Vector signs = sign_pattern(n, k);
  Matrix theta = k == 0 ? Matrix::Identity(n, n) : conjugate_symmetric(pi, signs);
  return CriticalPointInfo{RotationMatrix(std::move(theta)), k, std::move(pi), std::move(signs)};
}

CriticalPointInfo make_critical(int n, int k, std::uint64_t seed) {
  check_index(n, k);
  if (n < 2) return make_critical(n, k, Matrix::Identity(n, n));
  return make_critical(n, k, haar_sample(n, seed).matrix());
}

std::optional<int> classify(const RotationMatrix& theta, double tol) {
  const Matrix& t = theta.matrix();
  const int n = theta.dim();
  if ((t - t.transpose()).norm() > tol) return std::nullopt;
  if ((t * t - Matrix::Identity(n, n)).norm() > tol) return std::nullopt;
  const double tr = t.trace();
  const int k = static_cast<int>(std::lround((n - tr) / 4.0));
  if (k < 0 || k > n / 2 || std::abs(tr - (n - 4.0 * k)) > 0.5)
    throw Error(ErrorCode::AmbiguousTrace, "trace " + std::to_string(tr) + " matches no component");
  return k;
}

int component_dimension(int n, int k) {
  check_index(n, k);
  return 2 * k * (n - 2 * k);
}

double membership_residual(const Matrix& theta, int k) {
  const double n = static_cast<double>(theta.rows());
  return (theta - theta.transpose()).norm() + std::abs(theta.trace() - (n - 4.0 * k));
}

std::vector<RotationMatrix> connect_in_component(const CriticalPointInfo& a,
                                                 const CriticalPointInfo& b, int steps) {
  if (a.k != b.k || a.dim() != b.dim())
    throw Error(ErrorCode::ComponentMismatch, "endpoints lie in different components");
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, "steps must be at least 1");
  const int n = a.dim();

  // Absorb a reordering of b's sign pattern into its frame.
  Matrix frame_b = b.frame;
  if (a.signs != b.signs) {
    std::vector<int> neg_a, pos_a, neg_b, pos_b;
    for (int i = 0; i < n; ++i) {
      (a.signs(i) < 0 ? neg_a : pos_a).push_back(i);
      (b.signs(i) < 0 ? neg_b : pos_b).push_back(i);
    }
    if (neg_a.size() != neg_b.size())
      throw Error(ErrorCode::ComponentMismatch, "sign patterns differ");
    Matrix perm = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < neg_a.size(); ++i) perm(neg_a[i], neg_b[i]) = 1.0;
    for (std::size_t i = 0; i < pos_a.size(); ++i) perm(pos_a[i], pos_b[i]) = 1.0;
    frame_b = with_positive_det(perm * frame_b);
  }
  Matrix frame_a = a.frame;
  const Vector& d = a.signs;

  const SkewMatrix w1 = frame_log(frame_a, d, 0xA11CE);
  const SkewMatrix w2 = frame_log(frame_b, d, 0xB0B);

  std::vector<RotationMatrix> curve;
  curve.reserve(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const Matrix m = expm(t * w2.matrix()) * expm((1.0 - t) * w1.matrix());
    curve.emplace_back(conjugate_symmetric(m, d));
  }
  return curve;
}

Matrix tangent_projector_at(const CriticalPointInfo& info) {
  const int n = info.dim();
  const int m = skew_dimension(n);
  if (m == 0) return Matrix(0, 0);
  const Matrix& t0 = info.theta.matrix();
  const std::vector<Matrix> basis = skew_basis(n);
  // Column j: vec of the antisymmetric part of B_j Theta0 (zero iff B_j Theta0 is symmetric).
  Matrix a(n * n, m);
  for (int j = 0; j < m; ++j) {
    const Matrix x = basis[j] * t0;
    const Matrix asym = x - x.transpose();
    a.col(j) = Eigen::Map<const Vector>(asym.data(), n * n);
  }
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const Matrix& v = svd.matrixV();
  Matrix proj = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i)
    if (s(i) < 1e-8) proj += v.col(i) * v.col(i).transpose();
  return proj;
}

}  // namespace sonflow
