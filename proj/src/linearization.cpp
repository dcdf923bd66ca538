#include "sonflow/linearization.hpp"

#include <Eigen/Eigenvalues>

#include "sonflow/objective.hpp"

namespace sonflow {

const char* to_string(StabilityVerdict v) noexcept {
  switch (v) {
    case StabilityVerdict::ExponentiallyStable: return "ExponentiallyStable";
    case StabilityVerdict::Saddle: return "Saddle";
    case StabilityVerdict::Degenerate: return "Degenerate";
  }
  return "unknown";
}

Matrix apply_linearization(const Matrix& theta0, const Matrix& x, double scale) {
  return -0.5 * scale * (theta0.transpose() * x + x * theta0);
}

LinearizationReport linearize(const CriticalPointInfo& info, double scale) {
  const Matrix& t0 = info.theta.matrix();
  if (!(gradient_norm(t0) < kCriticalGradTol))
    throw Error(ErrorCode::NotCritical, "linearize: base point is not an equilibrium");
  const int n = info.dim();
  const std::vector<Matrix> basis = skew_basis(n);
  const auto m = static_cast<Eigen::Index>(basis.size());

  // Column j: skew coordinates of L(B_j Theta0) Theta0^T.
  Matrix op(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Matrix lx = apply_linearization(t0, basis[j] * t0, scale);
    op.col(j) = skew_to_coords(lx * t0.transpose());
  }

  LinearizationReport rep{info, scale, op, Vector(), 0, 0, 0, StabilityVerdict::Degenerate};
  if (m > 0) {
    const Matrix sym = 0.5 * (op + op.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    rep.eigenvalues = solver.eigenvalues();
  } else {
    rep.eigenvalues = Vector(0);
  }
  for (Eigen::Index i = 0; i < rep.eigenvalues.size(); ++i) {
    const double ev = rep.eigenvalues(i);
    if (ev <= -kSpectrumThreshold) ++rep.n_stable;
    else if (ev >= kSpectrumThreshold) ++rep.n_unstable;
    else ++rep.n_zero;
  }
  if (rep.n_unstable > 0) rep.verdict = StabilityVerdict::Saddle;
  else if (rep.n_zero == 0 && m > 0) rep.verdict = StabilityVerdict::ExponentiallyStable;
  return rep;
}

TangentVector unstable_direction(const CriticalPointInfo& info) {
  if (info.k < 1) throw Error(ErrorCode::NoNegativePair, "no pair of -1 eigenvalues at k = 0");
  int first = -1;
  int second = -1;
  for (Eigen::Index i = 0; i < info.signs.size(); ++i) {
    if (info.signs(i) < 0) {
      if (first < 0) first = static_cast<int>(i);
      else if (second < 0) second = static_cast<int>(i);
    }
  }
  if (second < 0) throw Error(ErrorCode::NoNegativePair, "sign pattern lacks a -1 pair");
  // Theta0 = frame^T D frame, so the rows of the frame are eigenvectors.
  const Vector v1 = info.frame.row(first).transpose();
  const Vector v2 = info.frame.row(second).transpose();
  const Matrix u = v1 * v2.transpose() - v2 * v1.transpose();
  return TangentVector(info.theta, SkewMatrix::from_skew_part(u));
}

double hessian_linearization_consistency(const CriticalPointInfo& info) {
  const LinearizationReport rep = linearize(info, 1.0);
  const HessianForm form = hessian_at(info);
  if (rep.operator_matrix.size() == 0) return 0.0;
  return (-rep.operator_matrix - form.matrix()).cwiseAbs().maxCoeff();
}

}  // namespace sonflow
