#include "sonflow/manifold.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace sonflow {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotOnGroup: return "NotOnGroup";
    case ErrorCode::NotSkew: return "NotSkew";
    case ErrorCode::SingularInput: return "SingularInput";
    case ErrorCode::BaseMismatch: return "BaseMismatch";
    case ErrorCode::NotCritical: return "NotCritical";
    case ErrorCode::BadIndex: return "BadIndex";
    case ErrorCode::AmbiguousTrace: return "AmbiguousTrace";
    case ErrorCode::ComponentMismatch: return "ComponentMismatch";
    case ErrorCode::NoNegativePair: return "NoNegativePair";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

double orthogonality_defect(const Matrix& m) {
  return (m.transpose() * m - Matrix::Identity(m.rows(), m.cols())).norm();
}

RotationMatrix::RotationMatrix(Matrix entries, double ortho_tol)
    : entries_(std::move(entries)), ortho_tol_(ortho_tol) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols())
    throw Error(ErrorCode::InvalidArgument, "rotation matrix must be square and non-empty");
  if (!entries_.allFinite())
    throw Error(ErrorCode::NotOnGroup, "rotation matrix has non-finite entries");
  const double defect = sonflow::orthogonality_defect(entries_);
  if (!(defect <= ortho_tol_))
    throw Error(ErrorCode::NotOnGroup,
                "orthogonality defect " + std::to_string(defect) + " exceeds tolerance");
  if (entries_.determinant() < 0.5)
    throw Error(ErrorCode::NotOnGroup, "determinant is not +1");
}

RotationMatrix RotationMatrix::identity(int n) { return RotationMatrix(Matrix::Identity(n, n)); }

double RotationMatrix::orthogonality_defect() const { return sonflow::orthogonality_defect(entries_); }

SkewMatrix::SkewMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols())
    throw Error(ErrorCode::InvalidArgument, "skew matrix must be square and non-empty");
  const double asym = (entries_ + entries_.transpose()).norm();
  if (!(asym <= 1e-12 * std::max(1.0, entries_.norm())))
    throw Error(ErrorCode::NotSkew, "matrix is not skew-symmetric");
}

SkewMatrix SkewMatrix::zero(int n) { return SkewMatrix(Matrix::Zero(n, n)); }

SkewMatrix SkewMatrix::from_skew_part(const Matrix& m) {
  return SkewMatrix(0.5 * (m - m.transpose()));
}

SkewMatrix operator*(double s, const SkewMatrix& omega) { return SkewMatrix(s * omega.matrix()); }

SkewMatrix operator+(const SkewMatrix& a, const SkewMatrix& b) {
  return SkewMatrix(a.matrix() + b.matrix());
}

TangentVector::TangentVector(RotationMatrix base, SkewMatrix coord)
    : base_(std::move(base)), coord_(std::move(coord)) {
  if (base_.dim() != coord_.dim())
    throw Error(ErrorCode::InvalidArgument, "tangent vector dimensions disagree");
}

RotationMatrix project_to_group(const Matrix& m, double ortho_tol) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw Error(ErrorCode::InvalidArgument, "project_to_group needs a square matrix");
  if (!m.allFinite()) throw Error(ErrorCode::SingularInput, "matrix has non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sigma = svd.singularValues();
  const Eigen::Index last = sigma.size() - 1;
  if (!(sigma(last) >= 1e-12 * sigma(0)) || sigma(0) == 0.0)
    throw Error(ErrorCode::SingularInput, "matrix is numerically singular");
  Matrix u = svd.matrixU();
  const Matrix& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(last) *= -1.0;
  return RotationMatrix(u * v.transpose(), ortho_tol);
}

double metric(const TangentVector& x, const TangentVector& y) {
  if (x.base().dim() != y.base().dim() ||
      (x.base().matrix() - y.base().matrix()).cwiseAbs().maxCoeff() > 1e-12)
    throw Error(ErrorCode::BaseMismatch, "tangent vectors live at different base points");
  return (x.coord().matrix().transpose() * y.coord().matrix()).trace();
}

namespace {

// Higham (2005) thresholds on ||A||_1 for Pade degrees 3, 5, 7, 9, 13.
constexpr std::array<double, 5> kTheta = {1.495585217958292e-2, 2.539398330063230e-1,
                                          9.504178996162932e-1, 2.097847961257068e0,
                                          5.371920351148152e0};

constexpr std::array<double, 4> kB3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kB5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr std::array<double, 8> kB7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                       25200.0,    1512.0,    56.0,      1.0};
constexpr std::array<double, 10> kB9 = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                        30270240.0,    2162160.0,    110880.0,     3960.0,
                                        90.0,          1.0};
constexpr std::array<double, 14> kB13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

template <std::size_t N>
void pade_low(const Matrix& a, const std::array<double, N>& b, Matrix& u, Matrix& v) {
  const Eigen::Index n = a.rows();
  const Matrix ident = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  Matrix power = ident;
  Matrix uu = Matrix::Zero(n, n);
  Matrix vv = Matrix::Zero(n, n);
  for (std::size_t j = 0; j + 1 < N; j += 2) {
    vv += b[j] * power;
    uu += b[j + 1] * power;
    power = power * a2;
  }
  u = a * uu;
  v = vv;
}

void pade13(const Matrix& a, Matrix& u, Matrix& v) {
  const auto& b = kB13;
  const Eigen::Index n = a.rows();
  const Matrix ident = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix inner_u = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2);
  u = a * (inner_u + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
  v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 +
      b[0] * ident;
}

}  // namespace

Matrix expm(const Matrix& a) {
  const Eigen::Index n = a.rows();
  if (n == 0) return a;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  Matrix u;
  Matrix v;
  int squarings = 0;
  if (norm1 <= kTheta[0]) {
    pade_low(a, kB3, u, v);
  } else if (norm1 <= kTheta[1]) {
    pade_low(a, kB5, u, v);
  } else if (norm1 <= kTheta[2]) {
    pade_low(a, kB7, u, v);
  } else if (norm1 <= kTheta[3]) {
    pade_low(a, kB9, u, v);
  } else {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / kTheta[4]))));
    pade13(a / std::ldexp(1.0, squarings), u, v);
  }
  Matrix result = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

RotationMatrix group_exp(const SkewMatrix& omega) {
  const int n = omega.dim();
  return RotationMatrix(expm(omega.matrix()), std::max(kDefaultOrthoTol, 1e-12 * n));
}

SkewMatrix group_log(const RotationMatrix& theta) {
  const int n = theta.dim();
  const Matrix& m = theta.matrix();
  Eigen::RealSchur<Matrix> schur(m);
  const Matrix& t = schur.matrixT();
  const Matrix& q = schur.matrixU();

  Matrix log_t = Matrix::Zero(n, n);
  std::vector<int> negative;
  for (int i = 0; i < n;) {
    if (i + 1 < n && t(i + 1, i) != 0.0) {
      const double c = 0.5 * (t(i, i) + t(i + 1, i + 1));
      const double s = 0.5 * (t(i + 1, i) - t(i, i + 1));
      const double angle = std::atan2(s, c);
      log_t(i, i + 1) = -angle;
      log_t(i + 1, i) = angle;
      i += 2;
    } else {
      if (t(i, i) < 0.0) negative.push_back(i);
      i += 1;
    }
  }
  if (negative.size() % 2 != 0)
    throw Error(ErrorCode::NumericalFailure, "odd number of -1 eigenvalues in group_log");
  for (std::size_t p = 0; p < negative.size(); p += 2) {
    const int i = negative[p];
    const int j = negative[p + 1];
    log_t(i, j) = -std::numbers::pi;
    log_t(j, i) = std::numbers::pi;
  }

  Matrix omega = q * log_t * q.transpose();
  omega = 0.5 * (omega - omega.transpose());

  // Small-residual correction; only active when the Schur blocks lost a
  // tiny rotation angle to round-off.
  for (int iter = 0; iter < 3; ++iter) {
    const Matrix residual = m * expm(omega).transpose();
    const Matrix corr = 0.5 * (residual - residual.transpose());
    if (corr.norm() <= 1e-14 * n) break;
    omega += corr;
  }
  return SkewMatrix(omega);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

RotationMatrix haar_sample(int n, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "haar_sample needs n >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  if (q.determinant() < 0.0) q.col(n - 1) *= -1.0;
  return RotationMatrix(std::move(q));
}

TangentVector random_tangent(const RotationMatrix& theta, std::uint64_t seed) {
  const int n = theta.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix omega = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) {
      omega(k, l) = normal(rng);
      omega(l, k) = -omega(k, l);
    }
  return TangentVector(theta, SkewMatrix(std::move(omega)));
}

int skew_dimension(int n) { return n * (n - 1) / 2; }

std::vector<Matrix> skew_basis(int n) {
  std::vector<Matrix> basis;
  basis.reserve(static_cast<std::size_t>(skew_dimension(n)));
  const double w = 1.0 / std::numbers::sqrt2;
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) {
      Matrix b = Matrix::Zero(n, n);
      b(k, l) = w;
      b(l, k) = -w;
      basis.push_back(std::move(b));
    }
  return basis;
}

Vector skew_to_coords(const Matrix& omega) {
  const int n = static_cast<int>(omega.rows());
  Vector c(skew_dimension(n));
  int idx = 0;
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) c(idx++) = 0.5 * std::numbers::sqrt2 * (omega(k, l) - omega(l, k));
  return c;
}

Matrix coords_to_skew(const Vector& coords, int n) {
  if (coords.size() != skew_dimension(n))
    throw Error(ErrorCode::InvalidArgument, "coordinate vector has the wrong length");
  Matrix omega = Matrix::Zero(n, n);
  int idx = 0;
  const double w = 1.0 / std::numbers::sqrt2;
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) {
      omega(k, l) = w * coords(idx);
      omega(l, k) = -w * coords(idx);
      ++idx;
    }
  return omega;
}

}  // namespace sonflow
