#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "sonflow/manifold.hpp"
#include "support.hpp"

using namespace sonflow;

TEST_CASE("rotation admission") {
  CHECK(RotationMatrix::identity(4).matrix().isIdentity());
  CHECK_ERROR_CODE(RotationMatrix(Matrix::Constant(3, 3, 1.0)), ErrorCode::NotOnGroup);
  Matrix reflection = Matrix::Identity(3, 3);
  reflection(2, 2) = -1.0;
  CHECK_ERROR_CODE(RotationMatrix(reflection), ErrorCode::NotOnGroup);
  CHECK_ERROR_CODE(RotationMatrix(Matrix(2, 3)), ErrorCode::InvalidArgument);

  Matrix nearly = Matrix::Identity(3, 3);
  nearly(0, 1) = 1e-6;
  CHECK_ERROR_CODE(RotationMatrix(nearly), ErrorCode::NotOnGroup);
  CHECK_NOTHROW(RotationMatrix(nearly, 1e-5));
}

TEST_CASE("skew matrices") {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  CHECK_ERROR_CODE(SkewMatrix{m}, ErrorCode::NotSkew);
  const SkewMatrix w = SkewMatrix::from_skew_part(m + Matrix::Identity(2, 2));
  CHECK(w.matrix().isZero());
  Matrix a(3, 3);
  a << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  const Matrix s = SkewMatrix::from_skew_part(a).matrix();
  CHECK((s + s.transpose()).norm() == 0.0);
  CHECK((s - 0.5 * (a - a.transpose())).norm() == 0.0);
}

TEST_CASE("expm agrees with a reference exponential") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int n = 1; n <= 8; ++n) {
    for (double scale : {1e-6, 0.1, 1.0, 5.0, 40.0}) {
      Matrix a(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = scale * g(rng);
      const Matrix ref = oracle::exp(a);
      CHECK((expm(a) - ref).norm() <= 1e-11 * std::max(1.0, ref.norm()));
    }
  }
}

TEST_CASE("planar exponential uses the counter-clockwise convention") {
  Matrix gen(2, 2);
  gen << 0, -1, 1, 0;  // E21 - E12
  for (double a : {0.3, M_PI / 2, 2.9}) {
    const Matrix r = group_exp(SkewMatrix(a * gen)).matrix();
    Matrix expected(2, 2);
    expected << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    CHECK((r - expected).norm() < 1e-14);
  }
  // The opposite generator gives [[0, 1], [-1, 0]] at a quarter turn.
  Matrix quarter(2, 2);
  quarter << 0, 1, -1, 0;
  CHECK((group_exp(SkewMatrix(-(M_PI / 2) * gen)).matrix() - quarter).norm() < 1e-15);
}

TEST_CASE("group_exp matches the axis-angle formula") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Vector3d u(g(rng), g(rng), g(rng));
    const double angle = u.norm();
    u /= angle;
    Matrix w(3, 3);
    w << 0, -u(2), u(1), u(2), 0, -u(0), -u(1), u(0), 0;
    const Matrix r = group_exp(SkewMatrix(angle * w)).matrix();
    CHECK((r - oracle::rodrigues(u, angle)).norm() < 1e-13);
  }
}

TEST_CASE("group_log inverts group_exp") {
  for (int n = 2; n <= 8; ++n) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const RotationMatrix theta = haar_sample(n, seed);
      const SkewMatrix w = group_log(theta);
      CHECK((expm(w.matrix()) - theta.matrix()).norm() < 1e-12);
    }
    std::mt19937_64 rng(n);
    Matrix w = oracle::random_skew(n, rng);
    w *= 1.0 / w.norm();
    const Matrix back = group_log(group_exp(SkewMatrix(w))).matrix();
    CHECK((back - w).norm() < 1e-12);
  }
}

TEST_CASE("group_log handles half turns") {
  Matrix d = Matrix::Identity(5, 5);
  d(0, 0) = d(1, 1) = d(3, 3) = d(4, 4) = -1.0;
  const SkewMatrix w = group_log(RotationMatrix(d));
  CHECK((expm(w.matrix()) - d).norm() < 1e-12);
  CHECK(std::abs(w.matrix().norm() - M_PI * 2.0) < 1e-12);

  const RotationMatrix minus_i(-Matrix::Identity(4, 4));
  CHECK((expm(group_log(minus_i).matrix()) + Matrix::Identity(4, 4)).norm() < 1e-12);
}

TEST_CASE("projection onto the group") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int n = 2; n <= 7; ++n) {
    const Matrix r = haar_sample(n, 100 + n).matrix();
    Matrix noise(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) noise(i, j) = 1e-3 * g(rng);
    const Matrix m = r + noise;
    const Matrix p = project_to_group(m).matrix();
    CHECK((p - oracle::newton_polar(m)).norm() < 1e-12);
    CHECK((project_to_group(r).matrix() - r).norm() < 1e-13);
  }
  Matrix reflect = Matrix::Identity(3, 3);
  reflect(0, 0) = -1.0;
  const Matrix fixed = project_to_group(reflect).matrix();
  CHECK(fixed.determinant() == doctest::Approx(1.0));
  CHECK(orthogonality_defect(fixed) < 1e-14);
  CHECK_ERROR_CODE(project_to_group(Matrix::Zero(3, 3)), ErrorCode::SingularInput);
}

TEST_CASE("trace metric") {
  const RotationMatrix theta = haar_sample(4, 1);
  const TangentVector x = random_tangent(theta, 2);
  const TangentVector y = random_tangent(theta, 3);
  CHECK(metric(x, y) == doctest::Approx(metric(y, x)).epsilon(1e-14));
  CHECK(metric(x, x) == doctest::Approx(x.norm() * x.norm()).epsilon(1e-14));
  CHECK(metric(x, x) > 0.0);
  // Ambient inner product tr(X^T Y) agrees because Theta is orthogonal.
  CHECK(metric(x, y) == doctest::Approx((x.ambient().transpose() * y.ambient()).trace()).epsilon(1e-12));
  const TangentVector z = random_tangent(haar_sample(4, 4), 5);
  CHECK_ERROR_CODE(metric(x, z), ErrorCode::BaseMismatch);
}

TEST_CASE("haar sampling is deterministic and lands on the group") {
  for (int n = 2; n <= 8; ++n) {
    const RotationMatrix a = haar_sample(n, 77);
    CHECK(a.matrix() == haar_sample(n, 77).matrix());
    CHECK(a.matrix() != haar_sample(n, 78).matrix());
    CHECK(a.orthogonality_defect() < 1e-13);
    CHECK(a.matrix().determinant() == doctest::Approx(1.0));
  }
  CHECK_ERROR_CODE(haar_sample(1, 0), ErrorCode::InvalidArgument);
}

TEST_CASE("haar trace moments") {
  // E[tr] = 0 and E[tr^2] = 1 on SO(n), n >= 3.
  const int samples = 4000;
  for (int n = 3; n <= 5; ++n) {
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < samples; ++i) {
      const double t = haar_sample(n, derive_seed(n, i)).matrix().trace();
      s1 += t;
      s2 += t * t;
    }
    const double mean = s1 / samples;
    const double second = s2 / samples;
    CHECK(std::abs(mean) < 5.0 / std::sqrt(samples));
    CHECK(std::abs(second - 1.0) < 0.15);
  }
}

TEST_CASE("haar samples are left invariant in distribution") {
  const int n = 4;
  const Matrix p = haar_sample(n, 999).matrix();
  std::vector<double> plain, shifted;
  for (int i = 0; i < 2000; ++i) {
    const Matrix q = haar_sample(n, derive_seed(1, i)).matrix();
    const Matrix r = haar_sample(n, derive_seed(2, i)).matrix();
    plain.push_back(q(0, 0) + q.trace());
    const Matrix pr = p * r;
    shifted.push_back(pr(0, 0) + pr.trace());
  }
  CHECK(oracle::ks_statistic(plain, shifted) < oracle::ks_critical(plain.size(), shifted.size()));
}

TEST_CASE("derived seeds separate streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s)
    for (std::uint64_t i = 0; i < 256; ++i) seen.insert(derive_seed(s, i));
  CHECK(seen.size() == 4 * 256);
  CHECK(derive_seed(3, 4) == derive_seed(3, 4));
}

TEST_CASE("skew coordinates") {
  for (int n = 2; n <= 6; ++n) {
    const auto basis = skew_basis(n);
    REQUIRE(static_cast<int>(basis.size()) == skew_dimension(n));
    CHECK(skew_dimension(n) == n * (n - 1) / 2);
    for (std::size_t i = 0; i < basis.size(); ++i)
      for (std::size_t j = 0; j < basis.size(); ++j)
        CHECK((basis[i].transpose() * basis[j]).trace() == doctest::Approx(i == j ? 1.0 : 0.0));
    std::mt19937_64 rng(n);
    const Matrix w = oracle::random_skew(n, rng);
    const Vector c = skew_to_coords(w);
    CHECK((coords_to_skew(c, n) - w).norm() < 1e-14);
    CHECK(c.norm() == doctest::Approx(w.norm()));
  }
  CHECK_ERROR_CODE(coords_to_skew(Vector::Zero(2), 3), ErrorCode::InvalidArgument);
}

TEST_CASE("random tangents") {
  const RotationMatrix theta = haar_sample(5, 0);
  const TangentVector x = random_tangent(theta, 11);
  CHECK((x.coord().matrix() + x.coord().matrix().transpose()).norm() == 0.0);
  CHECK(x.coord().matrix() == random_tangent(theta, 11).coord().matrix());
  // Ambient X = Omega Theta satisfies Theta^T X + X^T Theta = 0.
  const Matrix a = theta.matrix().transpose() * x.ambient();
  CHECK((a + a.transpose()).norm() < 1e-13);
}
