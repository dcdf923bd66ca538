#include "sonflow/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include "parallel.hpp"
#include "sonflow/objective.hpp"

namespace sonflow {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int nearest_component(const Matrix& theta) {
  const int n = static_cast<int>(theta.rows());
  const int k = static_cast<int>(std::lround((n - theta.trace()) / 4.0));
  return std::clamp(k, 0, n / 2);
}

}  // namespace

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SON_FLOW_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

BasinReport run_basin(int n, int trials, const FlowConfig& cfg, std::uint64_t seed, int threads) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "basin runs need n >= 2");
  if (trials < 0) throw Error(ErrorCode::InvalidArgument, "trials must be non-negative");
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  FlowConfig run_cfg = cfg;
  run_cfg.record_stride = 0;
  struct Outcome {
    VerdictKind verdict = VerdictKind::NumericalFailure;
    int component = -1;
    double distance = 0.0;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(trials));
  detail::parallel_for(outcomes.size(), resolve_threads(threads), [&](std::size_t i) {
    const RotationMatrix theta0 = haar_sample(n, derive_seed(seed, i));
    const Trajectory tr = integrate(theta0, run_cfg);
    Outcome& out = outcomes[i];
    out.verdict = tr.verdict.kind;
    out.component = tr.verdict.component;
    if (tr.verdict.limit) out.distance = (*tr.verdict.limit - Matrix::Identity(n, n)).norm();
  });

  BasinReport rep;
  rep.n = n;
  rep.trials = trials;
  rep.seed = seed;
  rep.config = cfg;
  for (const Outcome& out : outcomes) {
    if (out.verdict == VerdictKind::ConvergedTo) {
      ++rep.counts[out.component];
      if (out.component == 0)
        rep.max_distance_to_identity = std::max(rep.max_distance_to_identity, out.distance);
    } else {
      ++rep.failures;
    }
  }
  rep.wall_time = seconds_since(start);
  return rep;
}

bool contract_holds(const BasinReport& rep) {
  if (rep.failures != 0) return false;
  for (const auto& [k, count] : rep.counts)
    if (k != 0 && count != 0) return false;
  const auto it = rep.counts.find(0);
  const int identity = it == rep.counts.end() ? 0 : it->second;
  return identity == rep.trials;
}

const char* to_string(DirectionKind k) noexcept {
  switch (k) {
    case DirectionKind::Unstable: return "unstable";
    case DirectionKind::Kernel: return "kernel";
    case DirectionKind::Random: return "random";
  }
  return "unknown";
}

std::optional<DirectionKind> parse_direction(const std::string& name) {
  if (name == "unstable") return DirectionKind::Unstable;
  if (name == "kernel") return DirectionKind::Kernel;
  if (name == "random") return DirectionKind::Random;
  return std::nullopt;
}

FlowConfig saddle_default_config() {
  FlowConfig cfg;
  cfg.t_max = 500.0;
  return cfg;
}

SaddleEscapeReport run_saddle_escape(int n, int k, double eps, DirectionKind kind, int trials,
                                     const FlowConfig& cfg, std::uint64_t seed, int threads) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "saddle runs need n >= 2");
  if (k < 1 || k > n / 2)
    throw Error(ErrorCode::InvalidArgument, "saddle runs need 1 <= k <= n/2");
  if (!(eps >= 0.0 && eps <= 0.1)) throw Error(ErrorCode::InvalidArgument, "eps must lie in [0, 0.1]");
  if (trials < 0) throw Error(ErrorCode::InvalidArgument, "trials must be non-negative");
  if (kind == DirectionKind::Kernel && eps > 0.0 && component_dimension(n, k) == 0)
    throw Error(ErrorCode::InvalidArgument, "component has no kernel directions");
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  FlowConfig run_cfg = cfg;
  run_cfg.record_stride = 0;
  // Round-off floor keeps eps = 0 runs from registering an escape on cost noise.
  const double threshold = 4.0 * k - std::max(2.0 * eps, 1e-9);

  SaddleEscapeReport rep;
  rep.n = n;
  rep.k = k;
  rep.eps = eps;
  rep.kind = kind;
  rep.trials = trials;
  rep.seed = seed;
  rep.config = cfg;
  rep.outcomes.resize(static_cast<std::size_t>(trials));

  detail::parallel_for(rep.outcomes.size(), resolve_threads(threads), [&](std::size_t i) {
    const CriticalPointInfo info = make_critical(n, k, derive_seed(seed, 2 * i));
    Matrix start_state = info.theta.matrix();
    if (eps > 0.0) {
      Matrix omega;
      switch (kind) {
        case DirectionKind::Unstable:
          omega = unstable_direction(info).coord().matrix();
          break;
        case DirectionKind::Kernel: {
          const Matrix proj = tangent_projector_at(info);
          const Vector raw =
              skew_to_coords(random_tangent(info.theta, derive_seed(seed, 2 * i + 1)).coord().matrix());
          omega = coords_to_skew(proj * raw, n);
          break;
        }
        case DirectionKind::Random:
          omega = random_tangent(info.theta, derive_seed(seed, 2 * i + 1)).coord().matrix();
          break;
      }
      omega /= omega.norm();
      start_state = expm(eps * omega) * start_state;
    }

    EscapeTrial& out = rep.outcomes[i];
    auto observer = [&out, threshold](double t, const Matrix&, double c, double) {
      if (out.escape_time < 0.0 && c < threshold) out.escape_time = t;
    };
    const Trajectory tr = integrate(RotationMatrix(start_state), run_cfg, observer);
    const Matrix& last = tr.final_state().matrix();
    out.verdict = tr.verdict.kind;
    out.component = tr.verdict.kind == VerdictKind::ConvergedTo ? tr.verdict.component
                                                                 : nearest_component(last);
    out.final_residual = membership_residual(last, k);
    out.max_grad_norm = tr.max_grad_norm;
    out.final_time = tr.final_time;
  });
  rep.wall_time = seconds_since(start);
  return rep;
}

bool contract_holds(const SaddleEscapeReport& rep) {
  for (const EscapeTrial& t : rep.outcomes) {
    if (rep.eps == 0.0) {
      if (t.component != rep.k || t.max_grad_norm > 1e-12) return false;
      continue;
    }
    switch (rep.kind) {
      case DirectionKind::Unstable:
      case DirectionKind::Random:
        if (t.verdict != VerdictKind::ConvergedTo || t.component != 0) return false;
        break;
      case DirectionKind::Kernel:
        if (!(t.final_residual <= 10.0 * rep.eps)) return false;
        break;
    }
  }
  return true;
}

bool MorseBottReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

MorseBottReport check_morse_bott(int n, int seeds, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "Morse-Bott checks need n >= 2");
  MorseBottReport rep;
  rep.n = n;
  rep.seeds = seeds;
  const int top = n / 2;
  const double expected_max = n % 2 == 0 ? 2.0 * n : 2.0 * n - 2.0;

  // (a) range of f and its maximum on the top component.
  double haar_min = 0.0;
  double haar_max = 0.0;
  double top_max = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const double f = cost(haar_sample(n, derive_seed(seed, 1000 + s)));
    haar_min = s == 0 ? f : std::min(haar_min, f);
    haar_max = std::max(haar_max, f);
    top_max = std::max(top_max, cost(make_critical(n, top, derive_seed(seed, 2000 + s)).theta));
  }
  {
    const double dev = std::abs(top_max - expected_max);
    const bool in_range = seeds == 0 || (haar_min >= 0.0 && haar_max <= expected_max + 1e-9);
    rep.checks.push_back({"morse_bott", "range_and_maximum", n,
                          in_range && (seeds == 0 || (dev <= 1e-9 && top_max >= 2.0 * n - 2.0 - 1e-9)),
                          seeds == 0 ? 0.0 : top_max, expected_max,
                          "max f on F_" + std::to_string(top) + "; Haar samples within [0, max]"});
  }

  // (b) f constant (= 4k) on each component.
  double worst_const = 0.0;
  for (int k = 0; k <= top; ++k)
    for (int s = 0; s < seeds; ++s)
      worst_const = std::max(
          worst_const, std::abs(cost(make_critical(n, k, derive_seed(seed, 3000 + 100 * k + s)).theta) - 4.0 * k));
  rep.checks.push_back({"morse_bott", "constant_on_components", n, worst_const <= 1e-9, worst_const,
                        1e-9, "max |f - 4k| over component samples"});

  // (c) Hessian kernel equals the component tangent space (dimension check).
  int mismatches = 0;
  for (int k = 0; k <= top; ++k)
    for (int s = 0; s < seeds; ++s) {
      const CriticalPointInfo info = make_critical(n, k, derive_seed(seed, 4000 + 100 * k + s));
      if (hessian_kernel_dimension(hessian_at(info)) != component_dimension(n, k)) ++mismatches;
    }
  rep.checks.push_back({"morse_bott", "kernel_dimension", n, mismatches == 0,
                        static_cast<double>(mismatches), 0.0,
                        "components where dim ker H != 2k(n-2k)"});
  return rep;
}

bool VerifyReport::passed() const {
  return validation.passed() &&
         std::all_of(morse_bott.begin(), morse_bott.end(), [](const MorseBottReport& r) { return r.passed(); });
}

VerifyReport run_verify(const std::vector<int>& n_list, std::uint64_t seed, int seeds, int threads) {
  VerifyReport rep;
  rep.validation = run_validation_suite(n_list, seed, threads);
  for (int n : n_list) rep.morse_bott.push_back(check_morse_bott(n, seeds, seed));
  return rep;
}

bool CriticalReport::passed() const {
  return classified == k && dimension == hessian_kernel_dimension && dimension == projector_rank &&
         std::abs(trace - (n - 4.0 * k)) <= 1e-9 && curve_in_component;
}

CriticalReport build_critical_report(const CriticalPointInfo& info, const std::string& frame_kind,
                                     std::uint64_t seed,
                                     const std::optional<CriticalPointInfo>& connect_to, int steps) {
  CriticalReport rep;
  rep.n = info.dim();
  rep.k = info.k;
  rep.frame = frame_kind;
  rep.seed = seed;
  rep.theta = info.theta.matrix();
  rep.trace = rep.theta.trace();
  rep.cost = cost(info.theta);
  rep.classified = classify(info.theta).value_or(-1);
  rep.dimension = component_dimension(rep.n, rep.k);
  rep.hessian_kernel_dimension = hessian_kernel_dimension(hessian_at(info));
  const Matrix proj = tangent_projector_at(info);
  rep.projector_rank = static_cast<int>(std::lround(proj.trace()));
  if (connect_to) {
    const std::vector<RotationMatrix> curve = connect_in_component(info, *connect_to, steps);
    rep.curve_steps = steps;
    rep.curve_endpoint_error = std::max((curve.front().matrix() - info.theta.matrix()).norm(),
                                        (curve.back().matrix() - connect_to->theta.matrix()).norm());
    for (const RotationMatrix& r : curve) {
      rep.curve_max_residual = std::max(rep.curve_max_residual, membership_residual(r.matrix(), rep.k));
      const std::optional<int> c = classify(r, 1e-7);
      if (!c || *c != rep.k) rep.curve_in_component = false;
    }
    if (rep.curve_endpoint_error > 1e-8) rep.curve_in_component = false;
  }
  return rep;
}

bool contract_holds(const LinearizationReport& rep) {
  const Matrix& op = rep.operator_matrix;
  if (op.size() > 0 && (op - op.transpose()).cwiseAbs().maxCoeff() > 1e-10) return false;
  if (rep.n_zero != component_dimension(rep.base.dim(), rep.base.k)) return false;
  for (Eigen::Index i = 0; i < rep.eigenvalues.size(); ++i) {
    const double ev = rep.eigenvalues(i);
    const double snapped = std::abs(ev) < 0.5 * rep.scale ? 0.0 : (ev < 0 ? -rep.scale : rep.scale);
    if (std::abs(ev - snapped) > 1e-9) return false;
  }
  return true;
}

}  // namespace sonflow
