#include "sonflow/flow.hpp"

#include <algorithm>
#include <cmath>

#include "sonflow/critical_set.hpp"
#include "sonflow/objective.hpp"

namespace sonflow {

namespace detail {
struct RotationAccess {
  static RotationMatrix unchecked(Matrix m, double tol) {
    return RotationMatrix(RotationMatrix::Unchecked{}, std::move(m), tol);
  }
};
}  // namespace detail

namespace {

constexpr double kCostIncreaseGuard = 1e-10;
constexpr double kTerminalClassifyTol = 1e-6;

// Skew generator A(Theta) with Theta' = A(Theta) Theta.
Matrix generator(const Matrix& theta, double scale) {
  return 0.5 * scale * (theta.transpose() - theta);
}

Matrix lie_euler(const Matrix& theta, const FlowConfig& cfg) {
  return expm(cfg.h * generator(theta, cfg.scale)) * theta;
}

// Commutator-free fourth order scheme built on the classical RK4 tableau.
Matrix lie_rk4(const Matrix& theta, const FlowConfig& cfg) {
  const double h = cfg.h;
  const Matrix f1 = h * generator(theta, cfg.scale);
  const Matrix y2 = expm(0.5 * f1) * theta;
  const Matrix f2 = h * generator(y2, cfg.scale);
  const Matrix y3 = expm(0.5 * f2) * theta;
  const Matrix f3 = h * generator(y3, cfg.scale);
  const Matrix y4 = expm(f3 - 0.5 * f1) * y2;
  const Matrix f4 = h * generator(y4, cfg.scale);
  const Matrix first = (1.0 / 4.0) * f1 + (1.0 / 6.0) * (f2 + f3) - (1.0 / 12.0) * f4;
  const Matrix second = (-1.0 / 12.0) * f1 + (1.0 / 6.0) * (f2 + f3) + (1.0 / 4.0) * f4;
  return expm(second) * (expm(first) * theta);
}

Matrix ambient_rk4(const Matrix& theta, const FlowConfig& cfg) {
  const double h = cfg.h;
  const Matrix k1 = vector_field(theta, cfg.scale);
  const Matrix k2 = vector_field(theta + 0.5 * h * k1, cfg.scale);
  const Matrix k3 = vector_field(theta + 0.5 * h * k2, cfg.scale);
  const Matrix k4 = vector_field(theta + h * k3, cfg.scale);
  return theta + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Matrix advance(const Matrix& theta, const FlowConfig& cfg) {
  // Exact equilibria (symmetric states) are fixed points of every scheme.
  if (theta == theta.transpose()) return theta;
  switch (cfg.method) {
    case Method::LieEuler: return lie_euler(theta, cfg);
    case Method::LieRk4: return lie_rk4(theta, cfg);
    case Method::AmbientRk4Project: return project_to_group(ambient_rk4(theta, cfg)).matrix();
  }
  return theta;
}

RotationMatrix admit(Matrix next, double tol) {
  try {
    return RotationMatrix(std::move(next), tol);
  } catch (const Error& e) {
    throw Error(ErrorCode::NumericalFailure, std::string("state left SO(n): ") + e.what());
  }
}

}  // namespace

const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::LieEuler: return "lie_euler";
    case Method::LieRk4: return "lie_rk4";
    case Method::AmbientRk4Project: return "ambient_rk4_project";
  }
  return "unknown";
}

std::optional<Method> parse_method(const std::string& name) {
  if (name == "lie_euler") return Method::LieEuler;
  if (name == "lie_rk4") return Method::LieRk4;
  if (name == "ambient_rk4_project") return Method::AmbientRk4Project;
  return std::nullopt;
}

const char* to_string(VerdictKind v) noexcept {
  switch (v) {
    case VerdictKind::ConvergedTo: return "converged";
    case VerdictKind::MaxTimeReached: return "max_time_reached";
    case VerdictKind::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

void FlowConfig::validate() const {
  if (!(h > 0.0) || !std::isfinite(h))
    throw Error(ErrorCode::InvalidArgument, "step size must be positive");
  if (!(t_max > 0.0) || !std::isfinite(t_max))
    throw Error(ErrorCode::InvalidArgument, "t_max must be positive");
  if (!(grad_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "grad_tol must be positive");
  if (scale != 1.0 && scale != 2.0)
    throw Error(ErrorCode::InvalidArgument, "scale must be 1 or 2");
  if (ortho_check_every < 1)
    throw Error(ErrorCode::InvalidArgument, "ortho_check_every must be at least 1");
  if (record_stride < 0) throw Error(ErrorCode::InvalidArgument, "record_stride must be >= 0");
}

Matrix vector_field(const Matrix& theta, double scale) {
  return generator(theta, scale) * theta;
}

Matrix vector_field(const RotationMatrix& theta, double scale) {
  return vector_field(theta.matrix(), scale);
}

RotationMatrix step(const RotationMatrix& theta, const FlowConfig& cfg) {
  return admit(advance(theta.matrix(), cfg), theta.ortho_tol());
}

Trajectory integrate(const RotationMatrix& theta0, const FlowConfig& cfg,
                     const FlowObserver& observer) {
  cfg.validate();
  Trajectory tr;
  tr.n = theta0.dim();

  auto record = [&tr](double t, const RotationMatrix& s, double c, double g) {
    tr.times.push_back(t);
    tr.states.push_back(s);
    tr.costs.push_back(c);
    tr.grad_norms.push_back(g);
  };

  RotationMatrix state = theta0;
  double c = cost(state);
  double g = gradient_norm(state.matrix());
  record(0.0, state, c, g);
  if (observer) observer(0.0, state.matrix(), c, g);
  tr.max_grad_norm = g;
  tr.max_ortho_drift = state.orthogonality_defect();

  bool converged = g <= cfg.grad_tol;
  bool failed = false;
  const auto max_steps = static_cast<std::size_t>(std::ceil(cfg.t_max / cfg.h - 1e-9));
  std::size_t last_recorded = 0;

  for (std::size_t i = 1; i <= max_steps && !converged; ++i) {
    Matrix next = advance(state.matrix(), cfg);
    const bool check = i % static_cast<std::size_t>(cfg.ortho_check_every) == 0 || i == max_steps;
    try {
      if (!next.allFinite()) throw Error(ErrorCode::NumericalFailure, "non-finite state");
      if (check) {
        state = admit(std::move(next), theta0.ortho_tol());
        tr.max_ortho_drift = std::max(tr.max_ortho_drift, state.orthogonality_defect());
      } else {
        state = detail::RotationAccess::unchecked(std::move(next), theta0.ortho_tol());
      }
    } catch (const Error& e) {
      tr.verdict.kind = VerdictKind::NumericalFailure;
      tr.verdict.message = e.what();
      failed = true;
      break;
    }

    const double t = static_cast<double>(i) * cfg.h;
    const double c_next = cost(state);
    g = gradient_norm(state.matrix());
    const double increase = c_next - c;
    tr.max_cost_increase = std::max(tr.max_cost_increase, increase);
    tr.max_grad_norm = std::max(tr.max_grad_norm, g);
    c = c_next;
    tr.steps = i;
    tr.final_time = t;
    if (observer) observer(t, state.matrix(), c, g);

    converged = g <= cfg.grad_tol;
    const bool keep = converged || i == max_steps || increase > kCostIncreaseGuard ||
                      (cfg.record_stride > 0 && i % static_cast<std::size_t>(cfg.record_stride) == 0);
    if (keep) {
      record(t, state, c, g);
      last_recorded = i;
    }
    if (increase > kCostIncreaseGuard) {
      tr.verdict.kind = VerdictKind::NumericalFailure;
      tr.verdict.message = "cost increased by " + std::to_string(increase) + " in one step";
      failed = true;
      break;
    }
  }
  if (!failed && last_recorded != tr.steps) record(tr.final_time, state, c, g);

  if (failed) return tr;
  if (!converged) {
    tr.verdict.kind = VerdictKind::MaxTimeReached;
    return tr;
  }
  try {
    RotationMatrix limit = project_to_group(state.matrix());
    const std::optional<int> k = classify(limit, kTerminalClassifyTol);
    if (!k) throw Error(ErrorCode::NumericalFailure, "terminal state is not critical");
    tr.verdict.kind = VerdictKind::ConvergedTo;
    tr.verdict.component = *k;
    tr.verdict.limit = limit.matrix();
  } catch (const Error& e) {
    tr.verdict.kind = VerdictKind::NumericalFailure;
    tr.verdict.message = e.what();
  }
  return tr;
}

double so2_reference(double theta0, double t) {
  return 2.0 * std::atan(std::tan(0.5 * theta0) * std::exp(-2.0 * t));
}

Matrix so2_rotation(double angle) {
  Matrix r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

}  // namespace sonflow
