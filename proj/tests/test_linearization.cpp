#include <cmath>

#include "oracles.hpp"
#include "sonflow/experiments.hpp"
#include "sonflow/flow.hpp"
#include "sonflow/linearization.hpp"
#include "sonflow/objective.hpp"
#include "support.hpp"

using namespace sonflow;

TEST_CASE("spectrum matches the eigenframe formula") {
  for (int n = 2; n <= 10; ++n) {
    for (int k = 0; k <= n / 2; ++k) {
      const CriticalPointInfo info = make_critical(n, k, derive_seed(n, k));
      for (double s : {1.0, 2.0}) {
        const LinearizationReport rep = linearize(info, s);
        const std::vector<double> expected = oracle::linearization_spectrum(n, k, s);
        REQUIRE(static_cast<std::size_t>(rep.eigenvalues.size()) == expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i)
          CHECK(std::abs(rep.eigenvalues(static_cast<Eigen::Index>(i)) - expected[i]) < 1e-9);
        CHECK(rep.n_stable == oracle::binomial2(n - 2 * k));
        CHECK(rep.n_unstable == oracle::binomial2(2 * k));
        CHECK(rep.n_zero == 2 * k * (n - 2 * k));
        CHECK(rep.n_stable + rep.n_unstable + rep.n_zero == n * (n - 1) / 2);
        CHECK((rep.operator_matrix - rep.operator_matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(contract_holds(rep));
      }
    }
  }
}

TEST_CASE("verdicts") {
  CHECK(linearize(make_critical(4, 0, std::uint64_t{1}), 2.0).verdict == StabilityVerdict::ExponentiallyStable);
  CHECK(linearize(make_critical(4, 1, std::uint64_t{1}), 2.0).verdict == StabilityVerdict::Saddle);
  CHECK(linearize(make_critical(4, 2, std::uint64_t{1}), 2.0).verdict == StabilityVerdict::Saddle);
  const LinearizationReport small = linearize(make_critical(3, 1, std::uint64_t{2}), 2.0);
  CHECK(small.n_stable == 0);
  CHECK(small.n_unstable == 1);
  CHECK(small.n_zero == 2);
}

TEST_CASE("identity contracts at a uniform rate") {
  for (int n = 2; n <= 8; ++n)
    for (double s : {1.0, 2.0}) {
      const LinearizationReport rep = linearize(make_critical(n, 0, Matrix(Matrix::Identity(n, n))), s);
      CHECK((rep.eigenvalues.array() + s).abs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("unstable direction is an eigenvector") {
  for (int n = 2; n <= 8; ++n)
    for (int k = 1; k <= n / 2; ++k) {
      const CriticalPointInfo info = make_critical(n, k, derive_seed(17, 10 * n + k));
      const TangentVector x = unstable_direction(info);
      CHECK(x.norm() == doctest::Approx(std::sqrt(2.0)));
      for (double s : {1.0, 2.0})
        CHECK((apply_linearization(info.theta.matrix(), x.ambient(), s) - s * x.ambient()).norm() <= 1e-10);
    }
  CHECK_ERROR_CODE(unstable_direction(make_critical(3, 0, std::uint64_t{0})), ErrorCode::NoNegativePair);
}

TEST_CASE("negated unit-scale operator is the hessian") {
  for (int n = 2; n <= 8; ++n)
    for (int k = 0; k <= n / 2; ++k)
      CHECK(hessian_linearization_consistency(make_critical(n, k, derive_seed(19, 10 * n + k))) <= 1e-10);
}

TEST_CASE("operator agrees with a difference quotient of the vector field") {
  std::mt19937_64 rng(4);
  for (int n = 3; n <= 6; ++n)
    for (int k = 0; k <= n / 2; ++k) {
      const CriticalPointInfo info = make_critical(n, k, derive_seed(23, 10 * n + k));
      const Matrix& t0 = info.theta.matrix();
      const LinearizationReport rep = linearize(info, 2.0);
      const Matrix w = oracle::random_skew(n, rng);
      const double eps = 1e-6;
      const Matrix v = vector_field(oracle::exp(eps * w) * t0, 2.0) / eps;
      const Vector quotient = skew_to_coords(v * t0.transpose());
      const Vector lin = rep.operator_matrix * skew_to_coords(w);
      CHECK((quotient - lin).norm() <= 1e-5 * std::max(lin.norm(), w.norm()));
    }
}

TEST_CASE("linearization requires an equilibrium") {
  CriticalPointInfo fake{haar_sample(3, 2), 0, Matrix::Identity(3, 3), Vector::Ones(3)};
  CHECK_ERROR_CODE(linearize(fake, 2.0), ErrorCode::NotCritical);
}
