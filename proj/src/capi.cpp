#include "sonflow/sonflow.h"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <variant>

#include "sonflow/experiments.hpp"
#include "sonflow/objective.hpp"
#include "sonflow/serialization.hpp"

using namespace sonflow;

struct son_trajectory {
  Trajectory tr;
  FlowConfig cfg;
};

struct son_critical {
  CriticalPointInfo info;
};

struct son_report {
  std::variant<BasinReport, SaddleEscapeReport, LinearizationReport, CriticalReport, VerifyReport> body;
  double wall_time = 0.0;
};

namespace {

thread_local std::string last_error;

son_status code_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return SON_INVALID_ARGUMENT;
    case ErrorCode::NotOnGroup: return SON_NOT_ON_GROUP;
    case ErrorCode::NotSkew: return SON_NOT_SKEW;
    case ErrorCode::SingularInput: return SON_SINGULAR_INPUT;
    case ErrorCode::BaseMismatch: return SON_BASE_MISMATCH;
    case ErrorCode::NotCritical: return SON_NOT_CRITICAL;
    case ErrorCode::BadIndex: return SON_BAD_INDEX;
    case ErrorCode::AmbiguousTrace: return SON_AMBIGUOUS_TRACE;
    case ErrorCode::ComponentMismatch: return SON_COMPONENT_MISMATCH;
    case ErrorCode::NoNegativePair: return SON_NO_NEGATIVE_PAIR;
    case ErrorCode::NumericalFailure: return SON_NUMERICAL_FAILURE;
    case ErrorCode::IoError: return SON_IO_ERROR;
  }
  return SON_INTERNAL_ERROR;
}

son_status fail(son_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class Fn>
son_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    fn();
    return SON_OK;
  } catch (const Error& e) {
    return fail(code_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SON_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(SON_INTERNAL_ERROR, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

Matrix read_square(int n, const double* data) {
  require(n >= 1, "n must be positive");
  require(data != nullptr, "matrix pointer is null");
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = data[i * n + j];
  return m;
}

void write_square(const Matrix& m, double* out) {
  const auto n = m.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out[i * n + j] = m(i, j);
}

FlowConfig to_config(const son_flow_config& c) {
  FlowConfig cfg;
  cfg.scale = c.scale;
  switch (c.method) {
    case SON_LIE_EULER: cfg.method = Method::LieEuler; break;
    case SON_LIE_RK4: cfg.method = Method::LieRk4; break;
    case SON_AMBIENT_RK4_PROJECT: cfg.method = Method::AmbientRk4Project; break;
    default: throw Error(ErrorCode::InvalidArgument, "unknown method");
  }
  cfg.h = c.h;
  cfg.t_max = c.t_max;
  cfg.grad_tol = c.grad_tol;
  cfg.ortho_check_every = c.ortho_check_every;
  cfg.record_stride = c.record_stride;
  return cfg;
}

void from_config(const FlowConfig& cfg, son_flow_config* c) {
  c->scale = cfg.scale;
  c->method = cfg.method == Method::LieEuler  ? SON_LIE_EULER
              : cfg.method == Method::LieRk4 ? SON_LIE_RK4
                                             : SON_AMBIENT_RK4_PROJECT;
  c->h = cfg.h;
  c->t_max = cfg.t_max;
  c->grad_tol = cfg.grad_tol;
  c->ortho_check_every = cfg.ortho_check_every;
  c->record_stride = cfg.record_stride;
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Format to_format(son_format f) {
  if (f == SON_FORMAT_JSON) return Format::Json;
  if (f == SON_FORMAT_CSV) return Format::Csv;
  throw Error(ErrorCode::InvalidArgument, "unknown format");
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

extern "C" {

const char* son_last_error(void) { return last_error.c_str(); }

const char* son_status_string(son_status status) {
  switch (status) {
    case SON_OK: return "ok";
    case SON_INVALID_ARGUMENT: return "invalid argument";
    case SON_NOT_ON_GROUP: return "not on SO(n)";
    case SON_NOT_SKEW: return "not skew-symmetric";
    case SON_SINGULAR_INPUT: return "singular input";
    case SON_BASE_MISMATCH: return "base point mismatch";
    case SON_NOT_CRITICAL: return "not a critical point";
    case SON_BAD_INDEX: return "bad component index";
    case SON_AMBIGUOUS_TRACE: return "ambiguous trace";
    case SON_COMPONENT_MISMATCH: return "component mismatch";
    case SON_NO_NEGATIVE_PAIR: return "no negative eigenvalue pair";
    case SON_NUMERICAL_FAILURE: return "numerical failure";
    case SON_IO_ERROR: return "I/O error";
    case SON_INTERNAL_ERROR: return "internal error";
  }
  return "unknown status";
}

void son_string_free(char* s) { std::free(s); }
void son_buffer_free(double* p) { std::free(p); }

void son_flow_config_default(son_flow_config* cfg) {
  if (cfg) from_config(FlowConfig{}, cfg);
}

void son_saddle_config_default(son_flow_config* cfg) {
  if (cfg) from_config(saddle_default_config(), cfg);
}

son_status son_flow_config_validate(const son_flow_config* cfg) {
  return guarded([&] {
    require(cfg != nullptr, "config is null");
    to_config(*cfg).validate();
  });
}

son_status son_parse_method(const char* name, son_method* out) {
  return guarded([&] {
    require(name && out, "null argument");
    const auto m = parse_method(name);
    if (!m) throw Error(ErrorCode::InvalidArgument, std::string("unknown method '") + name + "'");
    *out = *m == Method::LieEuler ? SON_LIE_EULER : *m == Method::LieRk4 ? SON_LIE_RK4 : SON_AMBIENT_RK4_PROJECT;
  });
}

son_status son_parse_format(const char* name, son_format* out) {
  return guarded([&] {
    require(name && out, "null argument");
    const auto f = parse_format(name);
    if (!f) throw Error(ErrorCode::InvalidArgument, std::string("unknown format '") + name + "'");
    *out = *f == Format::Json ? SON_FORMAT_JSON : SON_FORMAT_CSV;
  });
}

son_status son_parse_direction(const char* name, son_direction* out) {
  return guarded([&] {
    require(name && out, "null argument");
    const auto d = parse_direction(name);
    if (!d) throw Error(ErrorCode::InvalidArgument, std::string("unknown direction '") + name + "'");
    *out = *d == DirectionKind::Unstable ? SON_DIR_UNSTABLE : *d == DirectionKind::Kernel ? SON_DIR_KERNEL : SON_DIR_RANDOM;
  });
}

uint64_t son_derive_seed(uint64_t seed, uint64_t stream) { return derive_seed(seed, stream); }

int son_resolve_threads(int requested) { return resolve_threads(requested); }

son_status son_haar_sample(int n, uint64_t seed, double* out) {
  return guarded([&] {
    require(out != nullptr, "output pointer is null");
    write_square(haar_sample(n, seed).matrix(), out);
  });
}

son_status son_cost(int n, const double* theta, double* out) {
  return guarded([&] {
    require(out != nullptr, "output pointer is null");
    *out = cost(RotationMatrix(read_square(n, theta)));
  });
}

son_status son_classify(int n, const double* theta, double tol, int* k_out) {
  return guarded([&] {
    require(k_out != nullptr, "output pointer is null");
    *k_out = classify(RotationMatrix(read_square(n, theta)), tol).value_or(-1);
  });
}

son_status son_read_matrix_file(const char* path, int* n_out, double** data) {
  return guarded([&] {
    require(path && n_out && data, "null argument");
    const Matrix m = read_matrix_file(path);
    auto* buf = static_cast<double*>(std::malloc(sizeof(double) * static_cast<std::size_t>(m.size())));
    if (!buf) throw std::bad_alloc();
    write_square(m, buf);
    *n_out = static_cast<int>(m.rows());
    *data = buf;
  });
}

son_status son_write_file(const char* path, const char* content) {
  return guarded([&] {
    require(path && content, "null argument");
    write_atomic(path, content);
  });
}

son_status son_integrate(int n, const double* theta0, const son_flow_config* cfg, son_trajectory** out) {
  return guarded([&] {
    require(cfg && out, "null argument");
    const FlowConfig config = to_config(*cfg);
    config.validate();
    const RotationMatrix start(read_square(n, theta0));
    *out = new son_trajectory{integrate(start, config), config};
  });
}

int son_trajectory_dim(const son_trajectory* tr) { return tr ? tr->tr.n : 0; }

size_t son_trajectory_size(const son_trajectory* tr) { return tr ? tr->tr.size() : 0; }

son_status son_trajectory_record(const son_trajectory* tr, size_t index, double* t, double* cost_out,
                                 double* grad_norm, double* theta) {
  return guarded([&] {
    require(tr != nullptr, "trajectory is null");
    if (index >= tr->tr.size()) throw Error(ErrorCode::InvalidArgument, "record index out of range");
    if (t) *t = tr->tr.times[index];
    if (cost_out) *cost_out = tr->tr.costs[index];
    if (grad_norm) *grad_norm = tr->tr.grad_norms[index];
    if (theta) write_square(tr->tr.states[index].matrix(), theta);
  });
}

son_verdict son_trajectory_verdict(const son_trajectory* tr, int* component) {
  if (!tr) return SON_FAILED;
  if (component) *component = tr->tr.verdict.component;
  switch (tr->tr.verdict.kind) {
    case VerdictKind::ConvergedTo: return SON_CONVERGED;
    case VerdictKind::MaxTimeReached: return SON_MAX_TIME_REACHED;
    case VerdictKind::NumericalFailure: return SON_FAILED;
  }
  return SON_FAILED;
}

double son_trajectory_final_time(const son_trajectory* tr) { return tr ? tr->tr.final_time : 0.0; }

son_status son_trajectory_serialize(const son_trajectory* tr, son_format fmt, char** out) {
  return guarded([&] {
    require(tr && out, "null argument");
    *out = copy_string(serialize(tr->tr, tr->cfg, to_format(fmt)));
  });
}

void son_trajectory_free(son_trajectory* tr) { delete tr; }

son_status son_make_critical(int n, int k, uint64_t seed, son_critical** out) {
  return guarded([&] {
    require(out != nullptr, "output pointer is null");
    *out = new son_critical{make_critical(n, k, seed)};
  });
}

son_status son_make_critical_frame(int n, int k, const double* frame, son_critical** out) {
  return guarded([&] {
    require(out != nullptr, "output pointer is null");
    require(n >= 1, "n must be positive");
    const Matrix f = frame ? read_square(n, frame) : Matrix(Matrix::Identity(n, n));
    *out = new son_critical{make_critical(n, k, f)};
  });
}

int son_critical_dim(const son_critical* c) { return c ? c->info.dim() : 0; }

int son_critical_k(const son_critical* c) { return c ? c->info.k : -1; }

son_status son_critical_theta(const son_critical* c, double* out) {
  return guarded([&] {
    require(c && out, "null argument");
    write_square(c->info.theta.matrix(), out);
  });
}

void son_critical_free(son_critical* c) { delete c; }

son_status son_run_basin(int n, int trials, const son_flow_config* cfg, uint64_t seed, int threads,
                         son_report** out) {
  return guarded([&] {
    require(cfg && out, "null argument");
    require(trials >= 0, "trials must be non-negative");
    BasinReport rep = run_basin(n, trials, to_config(*cfg), seed, threads);
    const double wall = rep.wall_time;
    *out = new son_report{std::move(rep), wall};
  });
}

son_status son_run_saddle(int n, int k, double eps, son_direction direction, int trials,
                          const son_flow_config* cfg, uint64_t seed, int threads, son_report** out) {
  return guarded([&] {
    require(out != nullptr, "output pointer is null");
    DirectionKind kind;
    switch (direction) {
      case SON_DIR_UNSTABLE: kind = DirectionKind::Unstable; break;
      case SON_DIR_KERNEL: kind = DirectionKind::Kernel; break;
      case SON_DIR_RANDOM: kind = DirectionKind::Random; break;
      default: throw Error(ErrorCode::InvalidArgument, "unknown direction");
    }
    const FlowConfig config = cfg ? to_config(*cfg) : saddle_default_config();
    SaddleEscapeReport rep = run_saddle_escape(n, k, eps, kind, trials, config, seed, threads);
    const double wall = rep.wall_time;
    *out = new son_report{std::move(rep), wall};
  });
}

son_status son_run_spectrum(const son_critical* c, double scale, son_report** out) {
  return guarded([&] {
    require(c && out, "null argument");
    require(scale == 1.0 || scale == 2.0, "scale must be 1 or 2");
    const auto start = std::chrono::steady_clock::now();
    LinearizationReport rep = linearize(c->info, scale);
    *out = new son_report{std::move(rep), elapsed(start)};
  });
}

son_status son_run_critical(const son_critical* c, const char* frame_kind, uint64_t seed,
                            const son_critical* connect_to, int steps, son_report** out) {
  return guarded([&] {
    require(c && out, "null argument");
    require(connect_to == nullptr || steps >= 1, "steps must be at least 1");
    const auto start = std::chrono::steady_clock::now();
    std::optional<CriticalPointInfo> other;
    if (connect_to) other = connect_to->info;
    CriticalReport rep = build_critical_report(c->info, frame_kind ? frame_kind : "given", seed, other, steps);
    *out = new son_report{std::move(rep), elapsed(start)};
  });
}

son_status son_run_verify(const int* n_list, size_t count, uint64_t seed, int seeds, int threads,
                          son_report** out) {
  return guarded([&] {
    require(out != nullptr, "output pointer is null");
    require(count == 0 || n_list != nullptr, "n_list is null");
    require(seeds >= 0, "seeds must be non-negative");
    const auto start = std::chrono::steady_clock::now();
    const std::vector<int> ns(n_list, n_list + count);
    VerifyReport rep = run_verify(ns, seed, seeds, threads);
    *out = new son_report{std::move(rep), elapsed(start)};
  });
}

int son_report_passed(const son_report* r) {
  if (!r) return 0;
  return std::visit(
      [](const auto& rep) -> int {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, CriticalReport> || std::is_same_v<T, VerifyReport>)
          return rep.passed() ? 1 : 0;
        else
          return contract_holds(rep) ? 1 : 0;
      },
      r->body);
}

double son_report_wall_time(const son_report* r) { return r ? r->wall_time : 0.0; }

son_status son_report_serialize(const son_report* r, son_format fmt, char** out) {
  return guarded([&] {
    require(r && out, "null argument");
    const Format f = to_format(fmt);
    *out = copy_string(std::visit([f](const auto& rep) { return serialize(rep, f); }, r->body));
  });
}

son_status son_basin_count(const son_report* r, int k, int* out) {
  return guarded([&] {
    require(r && out, "null argument");
    const auto* rep = std::get_if<BasinReport>(&r->body);
    if (!rep) throw Error(ErrorCode::InvalidArgument, "not a basin report");
    const auto it = rep->counts.find(k);
    *out = it == rep->counts.end() ? 0 : it->second;
  });
}

son_status son_basin_failures(const son_report* r, int* out) {
  return guarded([&] {
    require(r && out, "null argument");
    const auto* rep = std::get_if<BasinReport>(&r->body);
    if (!rep) throw Error(ErrorCode::InvalidArgument, "not a basin report");
    *out = rep->failures;
  });
}

void son_report_free(son_report* r) { delete r; }

}  // extern "C"
