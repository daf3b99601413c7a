/*
 * ndsa - regularity, controllability and observability analysis of networked
 * dynamic systems built from descriptor-form subsystems.
 *
 * C interface of the shared library. All functions returning ndsa_status set
 * a thread-local error message retrievable via ndsa_last_error() on failure.
 * Strings returned through char** are owned by the caller and must be
 * released with ndsa_string_free().
 */
#ifndef NDSA_H
#define NDSA_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ndsa_status {
    NDSA_OK = 0,
    NDSA_ERR_INVALID_ARGUMENT = 1,
    NDSA_ERR_PARSE = 2,
    NDSA_ERR_DIMENSION = 3,
    NDSA_ERR_NOT_WELLPOSED = 4,
    NDSA_ERR_CONDITIONING = 5,
    NDSA_ERR_LFT_ILL_POSED = 6,
    NDSA_ERR_GENERATION = 7,
    NDSA_ERR_UNSUPPORTED = 8,
    NDSA_ERR_IO = 9,
    NDSA_ERR_INTERNAL = 10
} ndsa_status;

typedef struct ndsa_model ndsa_model;

typedef struct ndsa_options {
    double rel_rank_tol;        /* default 1e-9 */
    double residual_tol;        /* default 1e-8 */
    int forbid_dense_fallback;  /* nonzero: dense fallback reports inconclusive */
} ndsa_options;

void ndsa_options_init(ndsa_options* opts);

ndsa_status ndsa_model_from_json(const char* json_text, ndsa_model** out);
ndsa_status ndsa_model_from_file(const char* path, ndsa_model** out);
ndsa_status ndsa_model_to_json(const ndsa_model* model, int indent, char** out_json);
void ndsa_model_free(ndsa_model* model);

/*
 * check is one of "regularity", "observability", "controllability" or
 * "subsystem-design". The report is a single-line JSON document:
 * {check, verdict, method, lambda_points, certificates, notes, timings_ms}.
 */
ndsa_status ndsa_run_check(const ndsa_model* model, const char* check,
                           const ndsa_options* opts, char** out_report_json);

/* Exit-code policy: 0 pass, 1 fail, 2 not_wellposed or inconclusive, 3 bad report. */
int ndsa_report_verdict_code(const char* report_json);

/* Per-subsystem structure dump (KCF invariants, singular points). */
ndsa_status ndsa_explain(const ndsa_model* model, const ndsa_options* opts, char** out_json);

/*
 * spec_json: {seed, n_subsystems:[lo,hi], m_x:[lo,hi], m_v:[lo,hi],
 * m_z:[lo,hi], m_u:[lo,hi], m_y:[lo,hi], lft_q:[lo,hi], scm_density,
 * singular_e_prob, mode}; only seed is required.
 */
ndsa_status ndsa_random_model(const char* spec_json, char** out_model_json);

/*
 * Runs `count` seeded random models through the scalable checks and the
 * dense oracle; the summary JSON reports per-check agreement counts.
 */
ndsa_status ndsa_verify(const char* spec_json, int count, const ndsa_options* opts,
                        char** out_summary_json);

void ndsa_string_free(char* s);
const char* ndsa_last_error(void);

#ifdef __cplusplus
}
#endif

#endif /* NDSA_H */
