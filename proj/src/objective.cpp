#include "sonflow/objective.hpp"

#include <Eigen/Eigenvalues>

namespace sonflow {

HessianForm::HessianForm(CriticalPointInfo base, Matrix matrix)
    : base_(std::move(base)), matrix_(std::move(matrix)) {}

double HessianForm::evaluate(const SkewMatrix& omega1, const SkewMatrix& omega2) const {
  const Matrix& t0 = base_.theta.matrix();
  const Matrix& a = omega1.matrix();
  const Matrix& b = omega2.matrix();
  return 0.5 * (a.transpose() * t0 * b + b.transpose() * t0 * a).trace();
}

Vector HessianForm::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(matrix_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

double cost(const RotationMatrix& theta) { return theta.dim() - theta.matrix().trace(); }

double differential(const RotationMatrix& theta, const TangentVector& x) {
  if (x.base().dim() != theta.dim() ||
      (x.base().matrix() - theta.matrix()).cwiseAbs().maxCoeff() > 1e-12)
    throw Error(ErrorCode::BaseMismatch, "tangent vector is not based at theta");
  return -(x.coord().matrix() * theta.matrix()).trace();
}

TangentVector gradient(const RotationMatrix& theta) {
  return TangentVector(theta, SkewMatrix::from_skew_part(theta.matrix()));
}

double gradient_norm(const Matrix& theta) { return 0.5 * (theta - theta.transpose()).norm(); }

HessianForm hessian_at(const CriticalPointInfo& info) {
  if (!(gradient_norm(info.theta.matrix()) < kCriticalGradTol))
    throw Error(ErrorCode::NotCritical, "hessian_at: base point is not critical");
  const int n = info.dim();
  const Matrix& t0 = info.theta.matrix();
  const std::vector<Matrix> basis = skew_basis(n);
  const auto m = static_cast<Eigen::Index>(basis.size());
  std::vector<Matrix> applied;
  applied.reserve(basis.size());
  for (const Matrix& b : basis) applied.push_back(t0 * b);

  // G(i, j) = tr(B_i^T Theta0 B_j)
  Matrix g(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) g(i, j) = basis[i].cwiseProduct(applied[j]).sum();
  Matrix h = 0.5 * (g + g.transpose());
  return HessianForm(info, std::move(h));
}

int hessian_kernel_dimension(const HessianForm& form) {
  if (form.matrix().size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(form.matrix());
  const Vector& s = svd.singularValues();
  int count = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) < kKernelThreshold) ++count;
  return count;
}

}  // namespace sonflow
