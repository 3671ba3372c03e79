#ifndef QDOM_H
#define QDOM_H

#include <stddef.h>

#if defined(_WIN32)
#  define QDOM_API __declspec(dllexport)
#elif defined(__GNUC__)
#  define QDOM_API __attribute__((visibility("default")))
#else
#  define QDOM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. The run codes 1-4 coincide with the exit codes of `qdom run`. */
typedef enum qdom_status {
  QDOM_OK = 0,
  QDOM_ASSERTION_FAILED = 1,
  QDOM_SCHEMA_ERROR = 2,
  QDOM_HYPOTHESIS_VIOLATION = 3,
  QDOM_SOLVER_FAILURE = 4,
  QDOM_INVALID_ARGUMENT = 10,
  QDOM_IO_ERROR = 11,
  QDOM_DOMAIN_ERROR = 12
} qdom_status;

typedef struct qdom_run qdom_run;
typedef struct qdom_field qdom_field;

QDOM_API const char* qdom_version(void);

/* Message of the last failing call on this thread; never NULL. */
QDOM_API const char* qdom_last_error(void);

/* Runs a config file. `out_dir` may be NULL; otherwise it overrides QDOM_OUT and the
   config's output directory. On success *run receives a handle even when the run itself
   failed; the return value is the run status. */
QDOM_API qdom_status qdom_run_file(const char* config_path, const char* out_dir, qdom_run** run);
QDOM_API qdom_status qdom_run_json(const char* config_json, const char* out_dir, qdom_run** run);

QDOM_API qdom_status qdom_run_status(const qdom_run* run);
QDOM_API const char* qdom_run_message(const qdom_run* run);
/* Empty string when no report was written (schema errors). */
QDOM_API const char* qdom_run_report_path(const qdom_run* run);
/* Report JSON text as written to disk. */
QDOM_API const char* qdom_run_report(const qdom_run* run);
QDOM_API void qdom_run_free(qdom_run* run);

/* Field files (CSV or raster). */
QDOM_API qdom_status qdom_field_load(const char* path, qdom_field** field);
QDOM_API int qdom_field_dim(const qdom_field* field);
/* Cells along `axis` (0-based), 0 for an invalid axis. */
QDOM_API int qdom_field_cells(const qdom_field* field, int axis);
QDOM_API double qdom_field_spacing(const qdom_field* field);
QDOM_API double qdom_field_origin(const qdom_field* field, int axis);
QDOM_API size_t qdom_field_size(const qdom_field* field);
/* Node values with x0 varying fastest. */
QDOM_API const double* qdom_field_data(const qdom_field* field);
QDOM_API void qdom_field_free(qdom_field* field);

/* Writes one PGM (2D) or three axis-slice PGMs (3D) for a field file. */
QDOM_API qdom_status qdom_render(const char* field_path, const char* out_path);

/* Special functions. `twice_nu` is 2*nu with nu in {0, 1/2, 1, 3/2}. */
QDOM_API qdom_status qdom_bessel_j(int twice_nu, double x, double* out);
QDOM_API qdom_status qdom_bessel_zero(int twice_nu, int m, double* out);
QDOM_API qdom_status qdom_ball_capacity(int n, double k, double r, double* out);

#ifdef __cplusplus
}
#endif

#endif
