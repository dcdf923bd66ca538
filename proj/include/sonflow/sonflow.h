#ifndef SONFLOW_SONFLOW_H
#define SONFLOW_SONFLOW_H

/* C interface to the SO(n) flow library. Matrices are n*n doubles, row-major.
 * Every function returning son_status records a message retrievable with
 * son_last_error() on the calling thread. Strings and buffers handed out by the
 * library are released with son_string_free / son_buffer_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SON_API __declspec(dllexport)
#else
#define SON_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum son_status {
  SON_OK = 0,
  SON_INVALID_ARGUMENT,
  SON_NOT_ON_GROUP,
  SON_NOT_SKEW,
  SON_SINGULAR_INPUT,
  SON_BASE_MISMATCH,
  SON_NOT_CRITICAL,
  SON_BAD_INDEX,
  SON_AMBIGUOUS_TRACE,
  SON_COMPONENT_MISMATCH,
  SON_NO_NEGATIVE_PAIR,
  SON_NUMERICAL_FAILURE,
  SON_IO_ERROR,
  SON_INTERNAL_ERROR
} son_status;

typedef enum son_method { SON_LIE_EULER = 0, SON_LIE_RK4, SON_AMBIENT_RK4_PROJECT } son_method;
typedef enum son_format { SON_FORMAT_JSON = 0, SON_FORMAT_CSV } son_format;
typedef enum son_verdict { SON_CONVERGED = 0, SON_MAX_TIME_REACHED, SON_FAILED } son_verdict;
typedef enum son_direction { SON_DIR_UNSTABLE = 0, SON_DIR_KERNEL, SON_DIR_RANDOM } son_direction;

typedef struct son_flow_config {
  double scale;
  son_method method;
  double h;
  double t_max;
  double grad_tol;
  int ortho_check_every;
  int record_stride; /* 0 keeps the first and last state only */
} son_flow_config;

typedef struct son_trajectory son_trajectory;
typedef struct son_critical son_critical;
typedef struct son_report son_report;

SON_API const char* son_last_error(void);
SON_API const char* son_status_string(son_status status);
SON_API void son_string_free(char* s);
SON_API void son_buffer_free(double* p);

SON_API void son_flow_config_default(son_flow_config* cfg);
/* Defaults with t_max = 500. */
SON_API void son_saddle_config_default(son_flow_config* cfg);
SON_API son_status son_flow_config_validate(const son_flow_config* cfg);

SON_API son_status son_parse_method(const char* name, son_method* out);
SON_API son_status son_parse_format(const char* name, son_format* out);
SON_API son_status son_parse_direction(const char* name, son_direction* out);

SON_API uint64_t son_derive_seed(uint64_t seed, uint64_t stream);
SON_API int son_resolve_threads(int requested);

SON_API son_status son_haar_sample(int n, uint64_t seed, double* out);
SON_API son_status son_cost(int n, const double* theta, double* out);
/* *k_out = -1 when theta is not critical at tol. */
SON_API son_status son_classify(int n, const double* theta, double tol, int* k_out);
/* Reads the plain matrix format; *data is released with son_buffer_free. */
SON_API son_status son_read_matrix_file(const char* path, int* n_out, double** data);
SON_API son_status son_write_file(const char* path, const char* content);

/* Trajectories */
SON_API son_status son_integrate(int n, const double* theta0, const son_flow_config* cfg,
                                 son_trajectory** out);
SON_API int son_trajectory_dim(const son_trajectory* tr);
SON_API size_t son_trajectory_size(const son_trajectory* tr);
/* theta may be NULL. */
SON_API son_status son_trajectory_record(const son_trajectory* tr, size_t index, double* t,
                                         double* cost, double* grad_norm, double* theta);
SON_API son_verdict son_trajectory_verdict(const son_trajectory* tr, int* component);
SON_API double son_trajectory_final_time(const son_trajectory* tr);
SON_API son_status son_trajectory_serialize(const son_trajectory* tr, son_format fmt, char** out);
SON_API void son_trajectory_free(son_trajectory* tr);

/* Critical points */
SON_API son_status son_make_critical(int n, int k, uint64_t seed, son_critical** out);
/* frame: any orthogonal n*n matrix; NULL means the identity. */
SON_API son_status son_make_critical_frame(int n, int k, const double* frame, son_critical** out);
SON_API int son_critical_dim(const son_critical* c);
SON_API int son_critical_k(const son_critical* c);
SON_API son_status son_critical_theta(const son_critical* c, double* out);
SON_API void son_critical_free(son_critical* c);

/* Reports */
SON_API son_status son_run_basin(int n, int trials, const son_flow_config* cfg, uint64_t seed,
                                 int threads, son_report** out);
/* cfg may be NULL for the saddle defaults. */
SON_API son_status son_run_saddle(int n, int k, double eps, son_direction direction, int trials,
                                  const son_flow_config* cfg, uint64_t seed, int threads,
                                  son_report** out);
SON_API son_status son_run_spectrum(const son_critical* c, double scale, son_report** out);
/* connect_to may be NULL; frame_kind names the frame in the report. */
SON_API son_status son_run_critical(const son_critical* c, const char* frame_kind, uint64_t seed,
                                    const son_critical* connect_to, int steps, son_report** out);
SON_API son_status son_run_verify(const int* n_list, size_t count, uint64_t seed, int seeds,
                                  int threads, son_report** out);

/* 1 when every contract of the report holds. */
SON_API int son_report_passed(const son_report* r);
SON_API double son_report_wall_time(const son_report* r);
SON_API son_status son_report_serialize(const son_report* r, son_format fmt, char** out);
SON_API son_status son_basin_count(const son_report* r, int k, int* out);
SON_API son_status son_basin_failures(const son_report* r, int* out);
SON_API void son_report_free(son_report* r);

#ifdef __cplusplus
}
#endif

#endif
