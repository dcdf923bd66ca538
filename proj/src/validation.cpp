#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "parallel.hpp"
#include "sonflow/experiments.hpp"
#include "sonflow/objective.hpp"

namespace sonflow {

namespace {

class Checks {
 public:
  Checks(std::string module, int n) : module_(std::move(module)), n_(n) {}

  // measured <= threshold
  void at_most(const std::string& name, double measured, double threshold, std::string detail = {}) {
    out_.push_back({module_, name, n_, measured <= threshold, measured, threshold, std::move(detail)});
  }
  void flag(const std::string& name, bool ok, double measured, double threshold, std::string detail = {}) {
    out_.push_back({module_, name, n_, ok, measured, threshold, std::move(detail)});
  }

  std::vector<CheckResult> take() { return std::move(out_); }

 private:
  std::string module_;
  int n_;
  std::vector<CheckResult> out_;
};

int choose2(int m) { return m * (m - 1) / 2; }

Matrix haar_orthogonal(int n, std::uint64_t seed) {
  // Haar on O(n): a rotation, with a reflection for odd seeds.
  Matrix p = haar_sample(n, seed).matrix();
  if (seed % 2 == 1) p.col(0) = -p.col(0);
  return p;
}

std::vector<CheckResult> objective_checks(int n, std::uint64_t seed) {
  Checks c("objective", n);
  const std::uint64_t base = derive_seed(seed, 10 + n);

  double consistency = 0.0;
  double fd_grad = 0.0;
  const double h = 1e-5;
  for (int s = 0; s < 200; ++s) {
    const RotationMatrix theta = haar_sample(n, derive_seed(base, 2 * s));
    const TangentVector x = random_tangent(theta, derive_seed(base, 2 * s + 1));
    const double d = differential(theta, x);
    consistency = std::max(consistency, std::abs(d - metric(gradient(theta), x)) /
                                            (1.0 + theta.matrix().norm()));
    const Matrix& omega = x.coord().matrix();
    const double fd = (cost(RotationMatrix(expm(h * omega) * theta.matrix())) -
                       cost(RotationMatrix(expm(-h * omega) * theta.matrix()))) /
                      (2.0 * h);
    const double scale = std::max(std::abs(d), omega.norm() * gradient_norm(theta.matrix()));
    if (scale > 0.0) fd_grad = std::max(fd_grad, std::abs(fd - d) / scale);
  }
  c.at_most("gradient_consistency", consistency, 1e-12, "|df(X) - g(grad f, X)| / (1 + |Theta|)");
  c.at_most("gradient_finite_difference", fd_grad, 1e-6, "central difference, h = 1e-5");

  double fd_hess = 0.0;
  double invariance = 0.0;
  double symmetry = 0.0;
  double evaluator = 0.0;
  int kernel_mismatch = 0;
  bool indefinite = true;
  const double hh = 1e-4;
  const std::vector<Matrix> basis = skew_basis(n);
  for (int k = 0; k <= n / 2; ++k) {
    for (int s = 0; s < 20; ++s) {
      const std::uint64_t ps = derive_seed(base, 1000 + 100 * k + s);
      const CriticalPointInfo info = make_critical(n, k, ps);
      const HessianForm form = hessian_at(info);
      const Matrix& t0 = info.theta.matrix();

      const Matrix omega = random_tangent(info.theta, derive_seed(ps, 1)).coord().matrix().normalized();
      const double second = (cost(RotationMatrix(expm(hh * omega) * t0)) - 2.0 * cost(info.theta) +
                             cost(RotationMatrix(expm(-hh * omega) * t0))) /
                            (hh * hh);
      const double exact = form.evaluate(SkewMatrix(omega), SkewMatrix(omega));
      fd_hess = std::max(fd_hess, std::abs(second - exact) / std::max(std::abs(exact), omega.squaredNorm()));

      const Matrix pi = haar_orthogonal(n, derive_seed(ps, 2));
      const CriticalPointInfo moved = make_critical(n, k, Matrix(info.frame * pi.transpose()));
      const Vector ev0 = form.eigenvalues();
      const Vector ev1 = hessian_at(moved).eigenvalues();
      if (ev0.size() > 0) invariance = std::max(invariance, (ev0 - ev1).cwiseAbs().maxCoeff());

      const Matrix& hm = form.matrix();
      if (hm.size() > 0) {
        symmetry = std::max(symmetry, (hm - hm.transpose()).cwiseAbs().maxCoeff());
        for (std::size_t i = 0; i < basis.size(); ++i)
          for (std::size_t j = 0; j < basis.size(); ++j)
            evaluator = std::max(
                evaluator, std::abs(form.evaluate(SkewMatrix(basis[i]), SkewMatrix(basis[j])) -
                                    hm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
      }
      if (hessian_kernel_dimension(form) != component_dimension(n, k)) ++kernel_mismatch;

      if (k >= 1 && ev0.size() > 0) {
        // Orthonormal-basis spectrum lies in {-1, 0, 1}; +1 needs two +1 eigenvalues of Theta0.
        const bool has_negative = ev0.minCoeff() <= -1.0 + 1e-10;
        const bool has_positive = ev0.maxCoeff() >= 1.0 - 1e-10;
        if (!has_negative || has_positive != (n - 2 * k >= 2)) indefinite = false;
      }
    }
  }
  c.at_most("hessian_finite_difference", fd_hess, 1e-4, "second central difference, h = 1e-4");
  c.at_most("hessian_frame_invariance", invariance, 1e-9);
  c.at_most("hessian_symmetry", symmetry, 1e-12);
  c.at_most("hessian_evaluator_matches_matrix", evaluator, 1e-10);
  c.flag("hessian_kernel_dimension", kernel_mismatch == 0, kernel_mismatch, 0.0,
         "components with dim ker H != 2k(n-2k)");

  const HessianForm at_identity = hessian_at(make_critical(n, 0, Matrix(Matrix::Identity(n, n))));
  const Vector ev = at_identity.eigenvalues();
  const double unit_dev = ev.size() ? (ev.array() - 1.0).abs().maxCoeff() : 0.0;
  c.at_most("identity_spectrum_orthonormal", unit_dev, 1e-10, "eigenvalues of H at I equal 1");
  Eigen::SelfAdjointEigenSolver<Matrix> coord(at_identity.coordinate_matrix(), Eigen::EigenvaluesOnly);
  const double coord_dev = ev.size() ? (coord.eigenvalues().array() - 2.0).abs().maxCoeff() : 0.0;
  c.at_most("identity_spectrum_coordinates", coord_dev, 1e-10,
            "eigenvalues in raw Omega_kl coordinates equal 2");
  c.flag("saddle_indefiniteness", indefinite, indefinite ? 0.0 : 1.0, 0.0,
         "every k >= 1: eigenvalue -1; eigenvalue +1 iff n - 2k >= 2");
  return c.take();
}

std::vector<CheckResult> critical_checks(int n, std::uint64_t seed) {
  Checks c("critical_set", n);
  const std::uint64_t base = derive_seed(seed, 100 + n);

  int round_trip_failures = 0;
  double cost_dev = 0.0;
  double trace_dev = 0.0;
  double rhs = 0.0;
  double angle = 0.0;
  int rank_mismatch = 0;
  int isolation_failures = 0;
  for (int k = 0; k <= n / 2; ++k) {
    for (int s = 0; s < 20; ++s) {
      const CriticalPointInfo info = make_critical(n, k, derive_seed(base, 100 * k + s));
      const Matrix& t0 = info.theta.matrix();
      if (classify(info.theta) != k) ++round_trip_failures;
      if (classify(info.theta, 0.5) != k) ++isolation_failures;
      cost_dev = std::max(cost_dev, std::abs(cost(info.theta) - 4.0 * k));
      trace_dev = std::max(trace_dev, std::abs(t0.trace() - (n - 4.0 * k)));
      rhs = std::max(rhs, ((t0.transpose() - t0) * t0).norm());

      if (s < 5) {
        const Matrix proj = tangent_projector_at(info);
        const HessianForm form = hessian_at(info);
        if (std::lround(proj.trace()) != component_dimension(n, k)) ++rank_mismatch;
        if (form.matrix().size() > 0) {
          Eigen::SelfAdjointEigenSolver<Matrix> es(form.matrix());
          const Vector& ev = es.eigenvalues();
          std::vector<Eigen::Index> kernel_cols;
          for (Eigen::Index i = 0; i < ev.size(); ++i)
            if (std::abs(ev(i)) < kKernelThreshold) kernel_cols.push_back(i);
          Matrix kb(ev.size(), static_cast<Eigen::Index>(kernel_cols.size()));
          for (std::size_t j = 0; j < kernel_cols.size(); ++j)
            kb.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(kernel_cols[j]);
          const Matrix diff = proj - kb * kb.transpose();
          // Sine of the largest principal angle for equal-dimension subspaces.
          angle = std::max(angle, Eigen::JacobiSVD<Matrix>(diff).singularValues()(0));
        }
      }
    }
  }
  double step_dev = 0.0;
  for (int k = 0; k + 1 <= n / 2; ++k)
    step_dev = std::max(step_dev, std::abs(cost(make_critical(n, k + 1, derive_seed(base, 7000 + k)).theta) -
                                           cost(make_critical(n, k, derive_seed(base, 8000 + k)).theta) - 4.0));

  c.flag("classify_round_trip", round_trip_failures == 0, round_trip_failures, 0.0);
  c.at_most("cost_equals_4k", cost_dev, 1e-9);
  c.at_most("trace_equals_n_minus_4k", trace_dev, 1e-9);
  c.at_most("kernel_tangent_principal_angle", angle, 1e-6);
  c.flag("projector_rank", rank_mismatch == 0, rank_mismatch, 0.0);
  c.at_most("isolation_cost_gap", step_dev, 1e-9, "adjacent components differ in cost by 4");
  c.flag("isolation_classify", isolation_failures == 0, isolation_failures, 0.0,
         "classify at tol 0.5 never changes the component");
  c.at_most("vector_field_vanishes", rhs, 1e-12);

  double endpoint = 0.0;
  double residual = 0.0;
  int misclassified = 0;
  for (int k = 1; k <= n / 2; ++k) {
    const CriticalPointInfo a = make_critical(n, k, derive_seed(base, 9000 + 2 * k));
    const CriticalPointInfo b = make_critical(n, k, derive_seed(base, 9001 + 2 * k));
    const std::vector<RotationMatrix> curve = connect_in_component(a, b, 100);
    endpoint = std::max({endpoint, (curve.front().matrix() - a.theta.matrix()).norm(),
                         (curve.back().matrix() - b.theta.matrix()).norm()});
    for (const RotationMatrix& r : curve) {
      residual = std::max(residual, membership_residual(r.matrix(), k));
      if (classify(r, 1e-7) != k) ++misclassified;
    }
  }
  c.at_most("connecting_curve_endpoints", endpoint, 1e-8);
  c.at_most("connecting_curve_residual", residual, 1e-7, "100 samples per component");
  c.flag("connecting_curve_classified", misclassified == 0, misclassified, 0.0);
  return c.take();
}

std::vector<CheckResult> flow_checks(int n, std::uint64_t seed) {
  Checks c("flow_integrator", n);
  const std::uint64_t base = derive_seed(seed, 200 + n);
  const RotationMatrix start = haar_sample(n, derive_seed(base, 0));

  double drift = 0.0;
  for (Method m : {Method::LieEuler, Method::LieRk4}) {
    FlowConfig cfg;
    cfg.method = m;
    cfg.h = 1e-2;
    cfg.t_max = 50.0;
    cfg.grad_tol = 1e-300;
    cfg.record_stride = 0;
    const Trajectory tr = integrate(start, cfg);
    drift = std::max(drift, tr.max_ortho_drift);
  }
  c.at_most("orthogonality_drift", drift, 1e-9, "lie_euler and lie_rk4, h = 1e-2, t in [0, 50]");

  FlowConfig cfg;
  const Trajectory tr = integrate(start, cfg);
  c.at_most("max_cost_increase", tr.max_cost_increase, 1e-10);
  int not_strict = 0;
  for (std::size_t i = 0; i + 1 < tr.size(); ++i)
    if (tr.grad_norms[i] > 1e-6 && !(tr.costs[i + 1] < tr.costs[i])) ++not_strict;
  c.flag("strict_decrease", not_strict == 0, not_strict, 0.0, "while grad norm > 1e-6");
  c.flag("haar_start_converges_to_identity",
         tr.verdict.kind == VerdictKind::ConvergedTo && tr.verdict.component == 0,
         tr.verdict.component, 0.0, to_string(tr.verdict.kind));

  // Omega-limit: the tail stays within 10x the gradient norm at its start.
  if (tr.verdict.kind == VerdictKind::ConvergedTo && tr.size() >= 10) {
    const std::size_t from = tr.size() - std::max<std::size_t>(1, tr.size() / 10);
    const double radius = 10.0 * std::max(tr.grad_norms[from], cfg.grad_tol);
    double spread = 0.0;
    for (std::size_t i = from; i < tr.size(); ++i)
      spread = std::max(spread, (tr.states[i].matrix() - tr.final_state().matrix()).norm());
    c.flag("omega_limit_single_point", spread <= radius, spread, radius, "last 10% of the trajectory");
  }

  double worst_ratio = 0.0;
  for (double h : {1e-2, 1e-3}) {
    FlowConfig ecfg;
    ecfg.h = h;
    ecfg.t_max = 2.0;
    const Trajectory et = integrate(start, ecfg);
    for (std::size_t i = 0; i + 1 < et.size(); ++i) {
      const double g = et.grad_norms[i];
      if (g < 1e-3) break;
      const double slope = (et.costs[i + 1] - et.costs[i]) / (et.times[i + 1] - et.times[i]);
      worst_ratio = std::max(worst_ratio, std::abs(slope / (-ecfg.scale * g * g) - 1.0));
    }
  }
  c.at_most("energy_identity_slope_ratio", worst_ratio, 0.2, "|ratio - 1| at h = 1e-2, 1e-3");

  {
    const Matrix p = haar_orthogonal(n, derive_seed(base, 3));
    FlowConfig ecfg;
    ecfg.t_max = 5.0;
    ecfg.grad_tol = 1e-300;
    const Trajectory a = integrate(start, ecfg);
    const Trajectory b = integrate(RotationMatrix(p * start.matrix() * p.transpose()), ecfg);
    double dev = 0.0;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
      dev = std::max(dev, (p * a.states[i].matrix() * p.transpose() - b.states[i].matrix()).norm());
    c.at_most("conjugation_equivariance", dev, 1e-8, "P in O(n), t in [0, 5]");
  }

  {
    double dev = 0.0;
    for (int k = 0; k <= n / 2; ++k) {
      const CriticalPointInfo info = make_critical(n, k, derive_seed(base, 50 + k));
      FlowConfig fcfg;
      fcfg.t_max = 1.0;
      fcfg.grad_tol = 1e-300;
      const Trajectory ft = integrate(info.theta, fcfg);
      for (const RotationMatrix& s : ft.states)
        dev = std::max(dev, (s.matrix() - info.theta.matrix()).norm());
    }
    c.at_most("critical_points_fixed", dev, 1e-13);
  }
  return c.take();
}

std::vector<CheckResult> order_checks(std::uint64_t) {
  Checks c("flow_integrator", 2);
  const double theta0 = 2.5;
  const double t_end = 1.0;
  std::vector<double> errors;
  for (double h : {1e-1, 5e-2, 2.5e-2}) {
    FlowConfig cfg;
    cfg.h = h;
    cfg.t_max = t_end;
    cfg.grad_tol = 1e-300;
    cfg.record_stride = 0;
    const Trajectory tr = integrate(RotationMatrix(so2_rotation(theta0)), cfg);
    const Matrix& last = tr.final_state().matrix();
    const double angle = std::atan2(last(1, 0), last(0, 0));
    errors.push_back(std::abs(angle - so2_reference(theta0, tr.final_time)));
  }
  double worst = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    const double ratio = errors[i] / errors[i + 1];
    worst = std::max(worst, std::abs(std::log2(ratio / 16.0)));
    if (!(ratio >= 8.0 && ratio <= 32.0)) ok = false;
  }
  c.flag("lie_rk4_fourth_order", ok, worst, 1.0, "|log2(error ratio / 16)| per halving of h");
  return c.take();
}

std::vector<CheckResult> linearization_checks(int n, std::uint64_t seed) {
  Checks c("linearization", n);
  const std::uint64_t base = derive_seed(seed, 300 + n);
  const int m = skew_dimension(n);

  int bookkeeping = 0;
  int zero_mismatch = 0;
  int multiplicity_mismatch = 0;
  int not_unstable = 0;
  double quantization = 0.0;
  double asymmetry = 0.0;
  double unstable_residual = 0.0;
  double consistency = 0.0;
  double fd = 0.0;
  for (int k = 0; k <= n / 2; ++k) {
    const CriticalPointInfo info = make_critical(n, k, derive_seed(base, k));
    const Matrix& t0 = info.theta.matrix();
    for (double s : {1.0, 2.0}) {
      const LinearizationReport rep = linearize(info, s);
      if (rep.n_stable + rep.n_unstable + rep.n_zero != m) ++bookkeeping;
      if (rep.n_zero != component_dimension(n, k)) ++zero_mismatch;
      if (rep.n_stable != choose2(n - 2 * k) || rep.n_unstable != choose2(2 * k)) ++multiplicity_mismatch;
      if (k >= 1 && rep.n_unstable < 1) ++not_unstable;
      for (Eigen::Index i = 0; i < rep.eigenvalues.size(); ++i) {
        const double ev = rep.eigenvalues(i);
        const double snapped = std::abs(ev) < 0.5 * s ? 0.0 : (ev < 0 ? -s : s);
        quantization = std::max(quantization, std::abs(ev - snapped));
      }
      if (m > 0)
        asymmetry = std::max(asymmetry,
                             (rep.operator_matrix - rep.operator_matrix.transpose()).cwiseAbs().maxCoeff());
      if (k >= 1) {
        const Matrix x = unstable_direction(info).ambient();
        unstable_residual = std::max(unstable_residual, (apply_linearization(t0, x, s) - s * x).norm());
      }
      for (int r = 0; r < 3 && m > 0; ++r) {
        const Matrix omega =
            random_tangent(info.theta, derive_seed(base, 100 * k + 10 * static_cast<int>(s) + r)).coord().matrix();
        const Vector cvec = skew_to_coords(omega);
        const Vector lc = rep.operator_matrix * cvec;
        for (double eps : {1e-6, 1e-5}) {
          const Matrix moved = expm(eps * omega) * t0;
          const Vector fdc = skew_to_coords((vector_field(moved, s) / eps) * t0.transpose());
          fd = std::max(fd, (fdc - lc).norm() / std::max(lc.norm(), cvec.norm()));
        }
      }
    }
    consistency = std::max(consistency, hessian_linearization_consistency(info));
  }
  c.flag("count_bookkeeping", bookkeeping == 0, bookkeeping, 0.0);
  c.flag("zero_count_equals_dimension", zero_mismatch == 0, zero_mismatch, 0.0);
  c.flag("multiplicities", multiplicity_mismatch == 0, multiplicity_mismatch, 0.0,
         "C(n-2k,2) stable, C(2k,2) unstable");
  c.flag("saddles_unstable", not_unstable == 0, not_unstable, 0.0, "n_unstable >= 1 for k >= 1");
  c.at_most("spectrum_quantized", quantization, 1e-9, "eigenvalues in {-s, 0, s}");
  c.at_most("operator_symmetry", asymmetry, 1e-10);
  c.at_most("unstable_direction_residual", unstable_residual, 1e-10, "|L(X) - s X|");
  c.at_most("hessian_consistency", consistency, 1e-10, "|-L(s = 1) - H|");
  c.at_most("finite_difference", fd, 1e-5, "eps = 1e-6, 1e-5");

  double identity_dev = 0.0;
  bool stable = true;
  const CriticalPointInfo id = make_critical(n, 0, Matrix(Matrix::Identity(n, n)));
  for (double s : {1.0, 2.0}) {
    const LinearizationReport rep = linearize(id, s);
    if (rep.verdict != StabilityVerdict::ExponentiallyStable) stable = false;
    if (rep.eigenvalues.size() > 0)
      identity_dev = std::max(identity_dev, (rep.eigenvalues.array() + s).abs().maxCoeff());
  }
  c.at_most("identity_uniform_rate", identity_dev, 1e-10, "eigenvalues at I equal -s");
  c.flag("identity_exponentially_stable", stable, stable ? 0.0 : 1.0, 0.0);
  return c.take();
}

}  // namespace

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

ValidationReport run_validation_suite(const std::vector<int>& n_list, std::uint64_t seed, int threads) {
  for (int n : n_list)
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "validation needs n >= 2");
  ValidationReport rep;
  rep.n_list = n_list;
  rep.seed = seed;
  if (n_list.empty()) return rep;

  // One job per (n, module) plus the order-of-accuracy run.
  const std::size_t per_n = 4;
  const std::size_t jobs = n_list.size() * per_n + 1;
  std::vector<std::vector<CheckResult>> results(jobs);
  detail::parallel_for(jobs, resolve_threads(threads), [&](std::size_t j) {
    if (j == jobs - 1) {
      results[j] = order_checks(seed);
      return;
    }
    const int n = n_list[j / per_n];
    switch (j % per_n) {
      case 0: results[j] = objective_checks(n, seed); break;
      case 1: results[j] = critical_checks(n, seed); break;
      case 2: results[j] = flow_checks(n, seed); break;
      case 3: results[j] = linearization_checks(n, seed); break;
    }
  });
  for (auto& r : results)
    for (auto& c : r) rep.checks.push_back(std::move(c));
  return rep;
}

}  // namespace sonflow
