#include <cmath>

#include "oracles.hpp"
#include "sonflow/critical_set.hpp"
#include "sonflow/flow.hpp"
#include "sonflow/objective.hpp"
#include "support.hpp"

using namespace sonflow;

namespace {

FlowConfig fixed_horizon(double t_max, double h, Method m = Method::LieRk4) {
  FlowConfig cfg;
  cfg.method = m;
  cfg.h = h;
  cfg.t_max = t_max;
  cfg.grad_tol = 1e-300;
  cfg.record_stride = 0;
  return cfg;
}

double planar_angle(const Matrix& r) { return std::atan2(r(1, 0), r(0, 0)); }

}  // namespace

TEST_CASE("config validation") {
  FlowConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.h = -1.0;
  try {
    cfg.validate();
    FAIL("negative step accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
    CHECK(std::string(e.what()) == "step size must be positive");
  }
  cfg = FlowConfig{};
  cfg.t_max = 0.0;
  CHECK_ERROR_CODE(cfg.validate(), ErrorCode::InvalidArgument);
  cfg = FlowConfig{};
  cfg.scale = 3.0;
  CHECK_ERROR_CODE(cfg.validate(), ErrorCode::InvalidArgument);
  cfg = FlowConfig{};
  cfg.grad_tol = 0.0;
  CHECK_ERROR_CODE(cfg.validate(), ErrorCode::InvalidArgument);
}

TEST_CASE("method names") {
  for (Method m : {Method::LieEuler, Method::LieRk4, Method::AmbientRk4Project})
    CHECK(parse_method(to_string(m)) == m);
  CHECK_FALSE(parse_method("rk45").has_value());
}

TEST_CASE("vector field") {
  const RotationMatrix theta = haar_sample(4, 3);
  const Matrix v = vector_field(theta, 2.0);
  const Matrix& t = theta.matrix();
  CHECK((v - (t.transpose() - t) * t).norm() < 1e-15);
  CHECK((vector_field(theta, 1.0) + gradient(theta).ambient()).norm() < 1e-15);
  const Matrix a = t.transpose() * v;
  CHECK((a + a.transpose()).norm() < 1e-14);
  for (int k = 0; k <= 2; ++k)
    CHECK(vector_field(make_critical(5, k, std::uint64_t{1}).theta, 2.0).norm() <= 1e-12);
}

TEST_CASE("planar flow follows the closed form") {
  const double a0 = 2.5;
  FlowConfig cfg = fixed_horizon(5.0, 1e-3);
  cfg.record_stride = 1;
  const Trajectory tr = integrate(RotationMatrix(so2_rotation(a0)), cfg);
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i)
    worst = std::max(worst, std::abs(planar_angle(tr.states[i].matrix()) - so2_reference(a0, tr.times[i])));
  CHECK(worst <= 1e-6);
  // Closed form agrees with an independent scalar integration.
  for (double t : {0.1, 1.0, 3.0})
    CHECK(std::abs(so2_reference(a0, t) - oracle::so2_angle(a0, t, 20000)) < 1e-12);
}

TEST_CASE("lie_rk4 is fourth order in several dimensions") {
  for (int n : {2, 3, 5}) {
    const RotationMatrix start = haar_sample(n, 21);
    const Matrix ref = integrate(start, fixed_horizon(1.0, 1e-4)).final_state().matrix();
    std::vector<double> err;
    for (double h : {0.1, 0.05, 0.025})
      err.push_back((integrate(start, fixed_horizon(1.0, h)).final_state().matrix() - ref).norm());
    for (std::size_t i = 0; i + 1 < err.size(); ++i) {
      const double ratio = err[i] / err[i + 1];
      CHECK(ratio > 8.0);
      CHECK(ratio < 32.0);
    }
  }
}

TEST_CASE("lie_euler is first order") {
  const RotationMatrix start = haar_sample(3, 22);
  const Matrix ref = integrate(start, fixed_horizon(1.0, 1e-3)).final_state().matrix();
  const double e1 = (integrate(start, fixed_horizon(1.0, 0.02, Method::LieEuler)).final_state().matrix() - ref).norm();
  const double e2 = (integrate(start, fixed_horizon(1.0, 0.01, Method::LieEuler)).final_state().matrix() - ref).norm();
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("projected ambient rk4 agrees with the lie scheme") {
  const RotationMatrix start = haar_sample(4, 23);
  const Trajectory a = integrate(start, fixed_horizon(2.0, 1e-2, Method::AmbientRk4Project));
  const Trajectory b = integrate(start, fixed_horizon(2.0, 1e-2));
  CHECK((a.final_state().matrix() - b.final_state().matrix()).norm() < 1e-6);
  CHECK(a.max_ortho_drift < 1e-12);
}

TEST_CASE("scale one runs at half speed") {
  const RotationMatrix start = haar_sample(3, 24);
  FlowConfig slow = fixed_horizon(2.0, 1e-3);
  slow.scale = 1.0;
  const Trajectory a = integrate(start, slow);
  const Trajectory b = integrate(start, fixed_horizon(1.0, 5e-4));
  CHECK((a.final_state().matrix() - b.final_state().matrix()).norm() < 1e-10);
}

TEST_CASE("haar starts converge to the identity") {
  for (int n = 2; n <= 8; ++n) {
    const Trajectory tr = integrate(haar_sample(n, 1000 + n), FlowConfig{});
    REQUIRE(tr.verdict.kind == VerdictKind::ConvergedTo);
    CHECK(tr.verdict.component == 0);
    CHECK((*tr.verdict.limit - Matrix::Identity(n, n)).norm() <= 1e-6);
    CHECK(tr.max_cost_increase <= 1e-10);
    CHECK(tr.max_ortho_drift <= 1e-9);
    for (std::size_t i = 0; i + 1 < tr.size(); ++i)
      if (tr.grad_norms[i] > 1e-6) CHECK(tr.costs[i + 1] < tr.costs[i]);
  }
}

TEST_CASE("orthogonality drift over a long horizon") {
  for (Method m : {Method::LieEuler, Method::LieRk4})
    for (int n : {3, 8}) CHECK(integrate(haar_sample(n, 5), fixed_horizon(50.0, 1e-2, m)).max_ortho_drift <= 1e-9);
}

TEST_CASE("identity start stops immediately") {
  const Trajectory tr = integrate(RotationMatrix::identity(3), FlowConfig{});
  CHECK(tr.size() == 1);
  CHECK(tr.steps == 0);
  CHECK(tr.verdict.kind == VerdictKind::ConvergedTo);
  CHECK(tr.verdict.component == 0);
}

TEST_CASE("equilibria are fixed") {
  for (int k = 1; k <= 2; ++k) {
    const CriticalPointInfo info = make_critical(5, k, std::uint64_t{9});
    const Trajectory tr = integrate(info.theta, fixed_horizon(1.0, 1e-2));
    CHECK((tr.final_state().matrix() - info.theta.matrix()).norm() <= 1e-13);
    CHECK(tr.max_grad_norm <= 1e-12);
    const Trajectory stop = integrate(info.theta, FlowConfig{});
    CHECK(stop.verdict.kind == VerdictKind::ConvergedTo);
    CHECK(stop.verdict.component == k);
  }
}

TEST_CASE("short horizons report max time") {
  FlowConfig cfg;
  cfg.t_max = 0.5;
  const Trajectory tr = integrate(haar_sample(4, 6), cfg);
  CHECK(tr.verdict.kind == VerdictKind::MaxTimeReached);
  CHECK(tr.final_time == doctest::Approx(0.5));
}

TEST_CASE("recording stride and observer") {
  FlowConfig cfg = fixed_horizon(1.0, 0.1);
  cfg.record_stride = 3;
  std::size_t calls = 0;
  const Trajectory tr = integrate(haar_sample(3, 7), cfg, [&](double, const Matrix&, double, double) { ++calls; });
  CHECK(calls == 11);
  CHECK(tr.size() == 5);  // t = 0, 0.3, 0.6, 0.9, 1.0
  CHECK(tr.times.back() == doctest::Approx(1.0));
  cfg.record_stride = 0;
  CHECK(integrate(haar_sample(3, 7), cfg).size() == 2);
}

TEST_CASE("conjugation equivariance") {
  const int n = 4;
  Matrix p = haar_sample(n, 70).matrix();
  p.col(1) = -p.col(1);  // orientation reversing
  const RotationMatrix start = haar_sample(n, 71);
  FlowConfig cfg = fixed_horizon(5.0, 1e-2);
  cfg.record_stride = 1;
  const Trajectory a = integrate(start, cfg);
  const Trajectory b = integrate(RotationMatrix(p * start.matrix() * p.transpose()), cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK((p * a.states[i].matrix() * p.transpose() - b.states[i].matrix()).norm() <= 1e-8);
}

TEST_CASE("single step admission") {
  const RotationMatrix next = step(haar_sample(3, 1), FlowConfig{});
  CHECK(next.orthogonality_defect() < 1e-13);
}
