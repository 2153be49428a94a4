#ifndef GRF_GRF_H
#define GRF_GRF_H

/* C interface to the invariant generalized Ricci flow solver.
 *
 * Every fallible call returns a grf_status. On failure the message is
 * available from grf_last_error() until the next failing call on the same
 * thread. Handles are opaque and owned by the caller; release them with the
 * matching *_free function. Strings returned by accessors stay valid for the
 * lifetime of the handle they came from. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define GRF_API __declspec(dllexport)
#else
#define GRF_API __attribute__((visibility("default")))
#endif

typedef enum grf_status {
    GRF_OK = 0,
    GRF_ERR_STRUCTURAL = 1, /* shape or index mismatch */
    GRF_ERR_DOMAIN = 2,     /* non-SPD metric, non-positive density, t <= 0 */
    GRF_ERR_VALIDATION = 3, /* algebra or state failed an invariant */
    GRF_ERR_CONFIG = 4,     /* malformed or invalid configuration */
    GRF_ERR_IO = 5,
    GRF_ERR_ABORT = 6,      /* integration aborted */
    GRF_ERR_ARGUMENT = 7,   /* null handle or out-of-range index */
    GRF_ERR_INTERNAL = 8
} grf_status;

/* Pipeline exit codes. */
enum { GRF_EXIT_CLEAN = 0, GRF_EXIT_ABORT = 1, GRF_EXIT_IDENTITY = 2 };

typedef struct grf_config grf_config;
typedef struct grf_run grf_run;
typedef struct grf_verify grf_verify;

GRF_API const char* grf_last_error(void);
GRF_API const char* grf_version(void);
GRF_API const char* grf_status_name(grf_status s);

/* ---- configuration */

GRF_API size_t grf_preset_count(void);
GRF_API const char* grf_preset_name(size_t i);
/* JSON text of a preset, to be released with grf_string_free. */
GRF_API grf_status grf_preset_json(const char* name, char** json_out);

GRF_API grf_status grf_config_load(const char* path, grf_config** out);
GRF_API grf_status grf_config_parse(const char* json_text, grf_config** out);
GRF_API grf_status grf_config_preset(const char* name, grf_config** out);
GRF_API const char* grf_config_name(const grf_config* c);
/* The merged configuration document as JSON. */
GRF_API const char* grf_config_json(const grf_config* c);
GRF_API void grf_config_free(grf_config* c);

/* ---- pipeline */

typedef struct grf_report_row {
    double t, F, W, R1, R2, R3, R4, W_extra;
    double dF_dt_fd, identity_gap_F, identity_gap_W;
    double min_eig_G, min_eig_g, mass_u;
} grf_report_row;

typedef struct grf_run_stats {
    double max_gap_F, max_gap_W;
    double mass_drift, max_dH;
    double runtime_s;
    long forward_steps;
    int F_nondecreasing, W_nondecreasing;
    int steady_rigidity, expander_rigidity;
} grf_run_stats;

/* Runs forward flow, backward conjugate heat solve and functional reports.
 * output_root may be NULL or empty to disable file output. A run that aborts
 * or misses its identity tolerance still returns GRF_OK with a handle; inspect
 * grf_run_exit_code. */
GRF_API grf_status grf_run_pipeline(const grf_config* c, const char* output_root, grf_run** out);
GRF_API int grf_run_exit_code(const grf_run* r);
GRF_API const char* grf_run_status(const grf_run* r);
GRF_API const char* grf_run_message(const grf_run* r);
GRF_API const char* grf_run_output_dir(const grf_run* r);
GRF_API const char* grf_run_summary(const grf_run* r);
GRF_API grf_status grf_run_stats_get(const grf_run* r, grf_run_stats* out);
GRF_API size_t grf_run_report_count(const grf_run* r);
GRF_API grf_status grf_run_report(const grf_run* r, size_t i, grf_report_row* out);
GRF_API void grf_run_free(grf_run* r);

/* Column header of report.csv. */
GRF_API const char* grf_report_columns(void);

/* Re-renders the summary of a run directory; text is released with grf_string_free. */
GRF_API grf_status grf_report_dir(const char* dir, char** text, int* recorded_exit_code);

/* ---- randomized verification */

typedef struct grf_check {
    const char* suite;
    const char* name;
    double value;
    double threshold;
    int pass;
    const char* detail;
} grf_check;

/* suite: "curvature", "torsion", "algebra", "variation" or "all". mesh must be even and >= 16. */
GRF_API grf_status grf_verify_run(const char* suite, uint64_t seed, int mesh, grf_verify** out);
GRF_API size_t grf_verify_count(const grf_verify* v);
GRF_API grf_status grf_verify_check(const grf_verify* v, size_t i, grf_check* out);
GRF_API int grf_verify_all_pass(const grf_verify* v);
GRF_API const char* grf_verify_table(const grf_verify* v);
GRF_API void grf_verify_free(grf_verify* v);

GRF_API void grf_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
