#pragma once

// Integration of Theta' = (scale/2) (Theta^T - Theta) Theta = -scale * grad f(Theta).
// scale = 2 is the ODE Theta' = (Theta^T - Theta) Theta; scale = 1 is the
// gradient flow of f itself.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sonflow/manifold.hpp"

namespace sonflow {

enum class Method { LieEuler, LieRk4, AmbientRk4Project };

const char* to_string(Method m) noexcept;
/// Accepts "lie_euler", "lie_rk4", "ambient_rk4_project".
std::optional<Method> parse_method(const std::string& name);

struct FlowConfig {
  double scale = 2.0;
  Method method = Method::LieRk4;
  double h = 1e-2;
  double t_max = 100.0;
  double grad_tol = 1e-10;
  /// Admission check of the state every this many steps (1 = every step).
  int ortho_check_every = 1;
  /// Keep every record_stride-th state in the trajectory; 0 keeps only the
  /// first and last. Summary statistics always cover every step.
  int record_stride = 1;

  /// Throws Error(InvalidArgument) on the first violated constraint.
  void validate() const;
};

enum class VerdictKind { ConvergedTo, MaxTimeReached, NumericalFailure };

const char* to_string(VerdictKind v) noexcept;

struct Verdict {
  VerdictKind kind = VerdictKind::MaxTimeReached;
  int component = -1;        // valid for ConvergedTo
  std::optional<Matrix> limit;  // polar-projected terminal state, ConvergedTo only
  std::string message;       // NumericalFailure detail
};

struct Trajectory {
  int n = 0;
  std::vector<double> times;
  std::vector<RotationMatrix> states;
  std::vector<double> costs;
  std::vector<double> grad_norms;
  Verdict verdict;

  std::size_t steps = 0;
  double final_time = 0.0;
  double max_ortho_drift = 0.0;
  double max_cost_increase = 0.0;
  double max_grad_norm = 0.0;

  std::size_t size() const { return times.size(); }
  const RotationMatrix& final_state() const { return states.back(); }
};

/// Called once per accepted state (including the initial one).
using FlowObserver =
    std::function<void(double t, const Matrix& theta, double cost, double grad_norm)>;

/// (scale/2) (Theta^T - Theta) Theta.
Matrix vector_field(const Matrix& theta, double scale);
Matrix vector_field(const RotationMatrix& theta, double scale);

/// One step of cfg.method. Throws Error(NumericalFailure) if the result fails
/// admission.
RotationMatrix step(const RotationMatrix& theta, const FlowConfig& cfg);

/// Steps until ||grad|| <= grad_tol or t >= t_max. Per-step cost increases
/// above 1e-10 and admission failures end the run with NumericalFailure.
Trajectory integrate(const RotationMatrix& theta0, const FlowConfig& cfg,
                     const FlowObserver& observer = {});

/// Closed-form angle of the SO(2) flow theta' = -2 sin(theta):
/// 2 atan(tan(theta0/2) e^{-2t}).
double so2_reference(double theta0, double t);

/// Planar rotation [[cos a, -sin a], [sin a, cos a]].
Matrix so2_rotation(double angle);

}  // namespace sonflow
