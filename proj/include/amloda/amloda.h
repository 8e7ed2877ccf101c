/* AMLODA: occupancy-detection attack and billing-preserving counter attack
 * for 1 Hz smart-meter traces.
 *
 * C89-compatible shared-library interface. All functions return an
 * amloda_status; outputs come back through pointer arguments. Handles are
 * opaque and must be released with the matching *_free function. Strings
 * returned through char** are heap-allocated JSON documents owned by the
 * caller; release them with amloda_string_free.
 *
 * On failure the thread-local message from amloda_last_error() describes
 * what went wrong; it stays valid until the next API call on that thread.
 */

#ifndef AMLODA_H
#define AMLODA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AMLODA_API __declspec(dllexport)
#else
#define AMLODA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum amloda_status {
    AMLODA_OK = 0,
    AMLODA_ERR_INVALID_ARGUMENT = 1, /* bad values, null handles, misuse */
    AMLODA_ERR_IO = 2,               /* unreadable / unwritable paths */
    AMLODA_ERR_PARSE = 3,            /* malformed CSV or JSON */
    AMLODA_ERR_DATA = 4,             /* domain precondition failed */
    AMLODA_ERR_NUMERIC = 5,          /* NaN/Inf or divergence */
    AMLODA_ERR_INTERNAL = 6
} amloda_status;

/* A power trace (watts at a fixed sample period; may hold missing samples
 * until cleaned), its occupancy labels, a trained attack model, and a
 * tariff schedule. */
typedef struct amloda_trace amloda_trace;
typedef struct amloda_labels amloda_labels;
typedef struct amloda_model amloda_model;
typedef struct amloda_tariff amloda_tariff;

AMLODA_API const char* amloda_version(void);
AMLODA_API const char* amloda_last_error(void);
AMLODA_API void amloda_string_free(char* s);

/* ---- traces and labels ------------------------------------------------ */

AMLODA_API amloda_status amloda_trace_create(const double* watts, size_t count,
                                             int64_t start_time, double sample_period_s,
                                             amloda_trace** out);

/* Canonical CSV: header `timestamp,power_w[,occupied]`; timestamps are
 * ISO-8601 UTC or epoch seconds; missing power is an empty field or -1.
 * *out_labels is set to NULL when the file has no occupied column
 * (out_labels itself may be NULL if the caller does not want labels). */
AMLODA_API amloda_status amloda_trace_load_csv(const char* path, amloda_trace** out_trace,
                                               amloda_labels** out_labels);
AMLODA_API amloda_status amloda_trace_save_csv(const amloda_trace* trace,
                                               const amloda_labels* labels_or_null,
                                               const char* path);

AMLODA_API size_t amloda_trace_len(const amloda_trace* trace);
AMLODA_API amloda_status amloda_trace_copy_values(const amloda_trace* trace, double* buf,
                                                  size_t buflen);
/* Sum of all samples in watt-samples; fails on traces with missing data. */
AMLODA_API amloda_status amloda_trace_total(const amloda_trace* trace, double* out_total);
AMLODA_API void amloda_trace_free(amloda_trace* trace);

AMLODA_API amloda_status amloda_labels_create(const uint8_t* values, size_t count,
                                              amloda_labels** out);
AMLODA_API size_t amloda_labels_len(const amloda_labels* labels);
AMLODA_API amloda_status amloda_labels_copy_values(const amloda_labels* labels, uint8_t* buf,
                                                   size_t buflen);
AMLODA_API void amloda_labels_free(amloda_labels* labels);

/* Drops missing samples and the same indices from the labels.
 * report_json (optional): {"removed":[indices]}. */
AMLODA_API amloda_status amloda_clean_missing(const amloda_trace* trace,
                                              const amloda_labels* labels_or_null,
                                              amloda_trace** out_trace,
                                              amloda_labels** out_labels,
                                              char** report_json);

/* Deterministic synthetic household. config_json:
 *   {"day_count":1,"base_load_w":100,"appliance_burst_w":500,
 *    "background_spike_w":0,"noise_std_w":5,"sample_period_s":1,
 *    "occupied_intervals":[["06:30","08:30"],["17:00","23:00"]],"seed":1} */
AMLODA_API amloda_status amloda_synth_household(const char* config_json,
                                                amloda_trace** out_trace,
                                                amloda_labels** out_labels);

/* ---- attack model ------------------------------------------------------ */

/* Trains the LSTM occupancy classifier. config_json (all optional):
 *   {"epochs":20,"learning_rate":0.05,"batch_size":32,"hidden_size":32,
 *    "seed":1,"window_len":60,"train_stride":60,"eval_stride":1,
 *    "train_fraction":0.8}
 * train_report_json (optional): {"loss_history":[...],"test_eval":{...}}. */
AMLODA_API amloda_status amloda_train(const amloda_trace* trace, const amloda_labels* labels,
                                      const char* config_json, amloda_model** out_model,
                                      char** train_report_json);

AMLODA_API amloda_status amloda_model_save(const amloda_model* model, const char* path);
AMLODA_API amloda_status amloda_model_load(const char* path, amloda_model** out);
AMLODA_API amloda_status amloda_model_info(const amloda_model* model, char** info_json);
AMLODA_API void amloda_model_free(amloda_model* model);

/* Runs the classifier over look-back windows of the trace and scores the
 * predictions against the labels. options_json: {"split":"test"|"all"}
 * ("test" = the chronological tail held out of training).
 * Report: accuracy/precision/recall/f1/fpr/fnr/mcc/auc + counts; metrics
 * with a zero denominator come back as null. */
AMLODA_API amloda_status amloda_model_evaluate(const amloda_model* model,
                                               const amloda_trace* trace,
                                               const amloda_labels* labels,
                                               const char* options_json, char** report_json);

/* ---- counter attacks --------------------------------------------------- */

/* Sign-of-input-gradient noise applied as paired subtract/add steps that
 * conserve the pair's total consumption. config_json:
 *   {"epsilon":0.0001,"gamma":null,"pair_period":2,"use_true_labels":false}
 * labels are only needed when use_true_labels is set. report_json
 * (optional): {"epsilon","gamma","total_delta_w",
 * "max_relative_perturbation","flipped_fraction","applied_pairs",
 * "skipped_pairs","warmup_zeros","gamma_satisfied"}. */
AMLODA_API amloda_status amloda_generate_oblivious(const amloda_model* model,
                                                   const amloda_trace* trace,
                                                   const amloda_labels* labels_or_null,
                                                   const char* config_json,
                                                   amloda_trace** out_trace,
                                                   char** report_json);

/* Zero-mean Gaussian baseline, floored at 0 W.
 * config_json: {"sigma2":7.5,"seed":1}.
 * report_json (optional): {"sigma2","seed","floored_count","total_delta_w"}. */
AMLODA_API amloda_status amloda_gaussian_perturb(const amloda_trace* trace,
                                                 const char* config_json,
                                                 amloda_trace** out_trace, char** report_json);

/* Mean squared deviation between a perturbed trace and its original: the
 * variance a Gaussian run needs for equal L2 distortion. */
AMLODA_API amloda_status amloda_match_distortion(const amloda_trace* original,
                                                 const amloda_trace* perturbed,
                                                 double* out_sigma2);

/* ---- billing ----------------------------------------------------------- */

/* Tariff JSON: {"type":"tou","frames":[{"len":N,"rate":r},...]} or
 * {"type":"plp","frame_len":N,"thresholds":[...],"rates":[...]}.
 * Rates are currency per watt-sample. */
AMLODA_API amloda_status amloda_tariff_parse(const char* json, amloda_tariff** out);
AMLODA_API amloda_status amloda_tariff_load(const char* path, amloda_tariff** out);
AMLODA_API amloda_status amloda_tariff_bill(const amloda_tariff* tariff,
                                            const amloda_trace* trace, int pad_zero,
                                            double* out_bill);
/* report_json: {"bill_original","bill_perturbed","delta","invariant"}. */
AMLODA_API amloda_status amloda_billing_invariance(const amloda_tariff* tariff,
                                                   const amloda_trace* original,
                                                   const amloda_trace* perturbed, int pad_zero,
                                                   char** report_json);
AMLODA_API void amloda_tariff_free(amloda_tariff* tariff);

/* ---- verification ------------------------------------------------------ */

/* Compares analytic gradients against central finite differences on
 * randomly initialized micro models.
 * config_json: {"trials":50,"max_hidden":4,"max_window":8,"seed":1}.
 * report_json: {"trials","max_rel_error","worst_coordinate"}. */
AMLODA_API amloda_status amloda_grad_check(const char* config_json, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* AMLODA_H */
