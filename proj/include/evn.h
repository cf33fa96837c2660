/* C interface to the evn event nugget detection and coreference pipeline.
 *
 * All functions operate on an opaque configuration handle holding the flat
 * key=value run configuration (see README for the key list). Runners read
 * their inputs from the configured paths and write their outputs under the
 * configured directories. Every call returns a status code; on failure
 * evn_last_error() carries a message for the calling thread.
 */
#ifndef EVN_H
#define EVN_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum evn_status {
  EVN_OK = 0,
  EVN_ERR_USAGE = 1,    /* bad arguments, unknown keys, missing files */
  EVN_ERR_DATA = 2,     /* malformed or inconsistent input data */
  EVN_ERR_INTERNAL = 3  /* unexpected failure */
} evn_status;

typedef struct evn_config evn_config;

evn_config* evn_config_new(void);
void evn_config_free(evn_config* cfg);

/* Loads key=value lines from a file; later sets override earlier ones. */
evn_status evn_config_load_file(evn_config* cfg, const char* path);
evn_status evn_config_set(evn_config* cfg, const char* key, const char* value);

/* NULL when the key is unset. The pointer stays valid until the next call
 * touching the same config. */
const char* evn_config_get(evn_config* cfg, const char* key);

/* Trains the span+realis and type ensembles plus the coreference net and
 * writes model files and a manifest into model_dir. */
evn_status evn_run_train(evn_config* cfg);

/* Detects nuggets, resolves coreference and writes out_dir/predicted.ann. */
evn_status evn_run_predict(evn_config* cfg);

/* Scores sys against gold over the corpus; writes report.tsv,
 * per_document.tsv and histogram.tsv into out_dir. */
evn_status evn_run_score(evn_config* cfg);

/* Writes the four corpus distribution tables into out_dir. */
evn_status evn_run_analyze(evn_config* cfg);

const char* evn_last_error(void);
const char* evn_version(void);

#ifdef __cplusplus
}
#endif

#endif /* EVN_H */
