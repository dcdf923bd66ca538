#pragma once

// Batch experiments: Monte-Carlo basin statistics, saddle-escape runs,
// Morse-Bott condition checks and the validation harness that bundles the
// invariant checks of the other modules.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sonflow/critical_set.hpp"
#include "sonflow/flow.hpp"
#include "sonflow/linearization.hpp"

namespace sonflow {

inline constexpr int kSchemaVersion = 1;

/// Resolves a worker count: explicit value, else SON_FLOW_THREADS, else the
/// number of hardware threads.
int resolve_threads(int requested);

struct BasinReport {
  int n = 0;
  int trials = 0;
  std::uint64_t seed = 0;
  std::map<int, int> counts;  // component k -> trajectories with ConvergedTo(k)
  int failures = 0;           // MaxTimeReached + NumericalFailure
  FlowConfig config;
  double max_distance_to_identity = 0.0;  // over ConvergedTo(0) trials
  double wall_time = 0.0;                 // seconds; not serialized
};

BasinReport run_basin(int n, int trials, const FlowConfig& cfg, std::uint64_t seed,
                      int threads = 0);

/// Every trial converged to the identity.
bool contract_holds(const BasinReport& rep);

enum class DirectionKind { Unstable, Kernel, Random };

const char* to_string(DirectionKind k) noexcept;
std::optional<DirectionKind> parse_direction(const std::string& name);

struct EscapeTrial {
  int component = -1;  // terminal component (nearest one when not converged)
  VerdictKind verdict = VerdictKind::MaxTimeReached;
  double escape_time = -1.0;  // first t with cost < 4k - 2 eps; -1 if never
  double final_residual = 0.0;  // membership residual of the terminal state w.r.t. F_k
  double max_grad_norm = 0.0;
  double final_time = 0.0;
};

struct SaddleEscapeReport {
  int n = 0;
  int k = 0;
  double eps = 0.0;
  DirectionKind kind = DirectionKind::Unstable;
  int trials = 0;
  std::uint64_t seed = 0;
  FlowConfig config;
  std::vector<EscapeTrial> outcomes;
  double wall_time = 0.0;
};

/// Defaults with t_max raised to 500 for the plateau near a saddle.
FlowConfig saddle_default_config();

/// Throws Error(InvalidArgument) for k < 1, eps outside [0, 0.1] or a kernel
/// run on a component without kernel directions.
SaddleEscapeReport run_saddle_escape(int n, int k, double eps, DirectionKind kind, int trials,
                                     const FlowConfig& cfg, std::uint64_t seed, int threads = 0);

/// eps = 0: every trial stays in F_k with gradient norm <= 1e-12 throughout.
/// unstable/random: every trial converges to the identity.
/// kernel: every terminal state has membership residual <= 10 eps.
bool contract_holds(const SaddleEscapeReport& rep);

struct CheckResult {
  std::string module;
  std::string name;
  int n = 0;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct MorseBottReport {
  int n = 0;
  int seeds = 0;
  std::vector<CheckResult> checks;
  bool passed() const;
};

MorseBottReport check_morse_bott(int n, int seeds, std::uint64_t seed = 0);

struct ValidationReport {
  std::vector<int> n_list;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  bool passed() const;
};

ValidationReport run_validation_suite(const std::vector<int>& n_list, std::uint64_t seed,
                                      int threads = 0);

struct VerifyReport {
  ValidationReport validation;
  std::vector<MorseBottReport> morse_bott;
  bool passed() const;
};

VerifyReport run_verify(const std::vector<int>& n_list, std::uint64_t seed, int seeds = 5,
                        int threads = 0);

/// Construction, classification and connecting-curve summary of one point of F_k.
struct CriticalReport {
  int n = 0;
  int k = 0;
  std::string frame;  // "identity", "haar" or "given"
  std::uint64_t seed = 0;
  Matrix theta;
  double trace = 0.0;
  double cost = 0.0;
  int classified = -1;  // -1 when not critical at the default tolerance
  int dimension = 0;
  int hessian_kernel_dimension = 0;
  int projector_rank = 0;
  int curve_steps = 0;  // 0 when no connecting curve was requested
  double curve_max_residual = 0.0;
  double curve_endpoint_error = 0.0;
  bool curve_in_component = true;
  bool passed() const;
};

CriticalReport build_critical_report(const CriticalPointInfo& info, const std::string& frame_kind,
                                     std::uint64_t seed,
                                     const std::optional<CriticalPointInfo>& connect_to,
                                     int steps);

/// Symmetric operator, zero count = component dimension, spectrum in {-s, 0, s}.
bool contract_holds(const LinearizationReport& rep);

}  // namespace sonflow
