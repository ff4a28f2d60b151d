/*
 * C interface to the scop library.
 *
 * Every function that produces output writes a heap-allocated JSON string
 * into *out_json; release it with scop_string_free(). On any failure the
 * output pointer is set to NULL, a status other than SCOP_OK is returned,
 * and scop_last_error() describes the failure (thread-local, valid until
 * the next call on the same thread).
 */
#ifndef SCOP_H
#define SCOP_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum scop_status {
    SCOP_OK = 0,
    SCOP_E_INVALID = 1,   /* bad arguments or malformed input data */
    SCOP_E_CONFIG = 2,    /* configuration file or override problem */
    SCOP_E_PROVIDER = 3,  /* completion provider unreachable or refused */
    SCOP_E_IO = 4,        /* filesystem or cache failure */
    SCOP_E_STATE = 5,     /* operation invalid in the current state */
    SCOP_E_INTERNAL = 6   /* unexpected internal failure */
} scop_status;

/* Opaque handle holding a validated run configuration. */
typedef struct scop_context scop_context;

/* Library version string; static storage, do not free. */
const char* scop_version(void);

/* Message for the most recent failure on this thread; static storage. */
const char* scop_last_error(void);

/* Release a string returned through an out_json parameter. NULL is ok. */
void scop_string_free(char* s);

/*
 * Load a configuration file and apply overrides. overrides_json may be
 * NULL or a JSON object; recognized keys: k, n_total, temperature, margin,
 * seed, provider ("mock"|"http"), paraphraser_endpoint, run_id, runs_dir,
 * baseline_run, scheme, network_disabled.
 */
scop_status scop_context_create(const char* config_path, const char* overrides_json,
                                scop_context** out);
void scop_context_destroy(scop_context* ctx);

/* Generate paraphrase forms for every dataset problem; no solving. */
scop_status scop_run_paraphrase(scop_context* ctx, char** out_json);

/* Full run: build forms, sample reasoning paths, vote, write artifacts. */
scop_status scop_run_solve(scop_context* ctx, char** out_json);

/* Margin-gated search for paraphrase exemplars over the training set. */
scop_status scop_search_exemplars(scop_context* ctx, char** out_json);

/* Instruction induction and scoring over a development set. */
scop_status scop_ape_search(scop_context* ctx, char** out_json);

/* Rebuild distributions, metrics, report, and charts from recorded
 * samples. baseline_run may be NULL or empty to use the run's manifest. */
scop_status scop_recompute_metrics(const char* run_dir, const char* baseline_run,
                                   char** out_json);

/* Variance-over-variants report for a finished run. */
scop_status scop_vov(const char* run_dir, const char* baseline_run, char** out_json);

/* Difficulty-map report comparing a baseline run to a paraphrased run. */
scop_status scop_difficulty_map(const char* baseline_run, const char* run_dir,
                                char** out_json);

/* Rank agreement (Spearman) across two or more finished runs. */
scop_status scop_agreement(const char* const* run_dirs, size_t n_runs, char** out_json);

/* Health-check both configured providers; never raises a provider error. */
scop_status scop_probe(scop_context* ctx, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* SCOP_H */
