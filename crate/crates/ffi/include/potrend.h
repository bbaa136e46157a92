#ifndef POTREND_H
#define POTREND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Week class of a document added to a POT window.
 */
typedef enum PotrendPotClass {
  POTREND_POT_CLASS_VERY_POSITIVE = 0,
  POTREND_POT_CLASS_POSITIVE = 1,
  POTREND_POT_CLASS_NEUTRAL = 2,
  POTREND_POT_CLASS_NEGATIVE = 3,
  POTREND_POT_CLASS_VERY_NEGATIVE = 4,
} PotrendPotClass;

/**
 * Result of a call. The first four values match the CLI exit codes.
 */
typedef enum PotrendStatus {
  POTREND_STATUS_OK = 0,
  POTREND_STATUS_CONFIG = 1,
  POTREND_STATUS_DATA = 2,
  POTREND_STATUS_NUMERIC = 3,
  /**
   * A null pointer, invalid UTF-8 or an out-of-range value.
   */
  POTREND_STATUS_INVALID_ARGUMENT = 4,
  /**
   * The library panicked; the handle involved should be freed.
   */
  POTREND_STATUS_PANIC = 5,
} PotrendStatus;

/**
 * A locked work directory with its configuration.
 */
typedef struct PotrendPipeline PotrendPipeline;

/**
 * Documents of one scoring window, grouped by week class.
 */
typedef struct PotrendPotWindow PotrendPotWindow;

/**
 * Classification metrics of one prediction vector.
 */
typedef struct PotrendMetrics {
  double accuracy;
  double mcc;
  /**
   * Nonzero when the MCC denominator is zero and `mcc` is reported as 0.
   */
  int mcc_degenerate;
  /**
   * F1 of the highest class index.
   */
  double f1_last;
} PotrendMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *potrend_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on this thread.
 */
const char *potrend_last_error(void);

/**
 * Writes a synthetic corpus and its `pipeline.toml` into `out_dir`.
 *
 * # Safety
 * `out_dir` must be a NUL-terminated string.
 */
enum PotrendStatus potrend_synth(const char *out_dir, uint64_t seed, double rho);

/**
 * Opens and locks the work directory named by the configuration at
 * `config_path` (null for defaults). `overrides` holds `n_overrides`
 * `key=value` strings applied on top.
 *
 * # Safety
 * Strings must be NUL-terminated, `overrides` must point to
 * `n_overrides` strings (or be null when it is 0), and `out` must be valid
 * for writes.
 */
enum PotrendStatus potrend_pipeline_open(const char *config_path,
                                         const char *const *overrides,
                                         uintptr_t n_overrides,
                                         int force,
                                         struct PotrendPipeline **out);

/**
 * Runs one stage by its CLI name (`ingest`, `label`, `pot`,
 * `train-extractor`, `score`, `train-summarizer`, `evaluate`,
 * `export-plot-data`) or `run` for all of them.
 *
 * # Safety
 * `pipeline` must come from [`potrend_pipeline_open`]; `stage` must be a
 * NUL-terminated string.
 */
enum PotrendStatus potrend_pipeline_run(struct PotrendPipeline *pipeline, const char *stage);

/**
 * Reruns the `pot` stage and writes the trajectory of `word` between two
 * ISO dates (`YYYY-MM-DD`) to `trajectory_<word>.csv` in the work directory.
 *
 * # Safety
 * `pipeline` must come from [`potrend_pipeline_open`]; strings must be
 * NUL-terminated.
 */
enum PotrendStatus potrend_pipeline_trajectory(struct PotrendPipeline *pipeline,
                                               const char *word,
                                               const char *from,
                                               const char *to);

/**
 * Releases a pipeline handle and its work directory lock. Null is ignored.
 *
 * # Safety
 * `pipeline` must come from [`potrend_pipeline_open`] and not be used after.
 */
void potrend_pipeline_free(struct PotrendPipeline *pipeline);

/**
 * An empty POT scoring window.
 */
struct PotrendPotWindow *potrend_pot_window_new(void);

/**
 * Tokenizes `doc_text` and adds it as one document of week class `class`,
 * a [`PotrendPotClass`] value.
 *
 * # Safety
 * `window` must come from [`potrend_pot_window_new`]; `doc_text` must be
 * NUL-terminated.
 */
enum PotrendStatus potrend_pot_window_add(struct PotrendPotWindow *window,
                                          int class_,
                                          const char *doc_text);

/**
 * POT score of `word` (lowercased) in the window with weight `alpha` on
 * the moderate classes.
 *
 * # Safety
 * `window` must come from [`potrend_pot_window_new`]; `word` must be
 * NUL-terminated and `out` valid for writes.
 */
enum PotrendStatus potrend_pot_window_score(struct PotrendPotWindow *window,
                                            const char *word,
                                            double alpha,
                                            double *out);

/**
 * Releases a POT window. Null is ignored.
 *
 * # Safety
 * `window` must come from [`potrend_pot_window_new`] and not be used after.
 */
void potrend_pot_window_free(struct PotrendPotWindow *window);

/**
 * Accuracy, MCC and F1 of `predictions` against `truths`, both `n` class
 * indices below `classes`.
 *
 * # Safety
 * `truths` and `predictions` must point to `n` values; `out` must be valid
 * for writes.
 */
enum PotrendStatus potrend_metrics(const uint32_t *truths,
                                   const uint32_t *predictions,
                                   uintptr_t n,
                                   uint32_t classes,
                                   struct PotrendMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POTREND_H */
