/*
 * C interface to the temporal-distillation training library.
 *
 * All functions return TKD_OK (0) on success or a negative error code; the
 * message for the most recent failure on the calling thread is available via
 * tkd_last_error(). Handles are opaque and must be released with the matching
 * *_free function. Strings returned through char** out-parameters are heap
 * allocated and must be released with tkd_string_free().
 */
#ifndef TKD_TKD_H_
#define TKD_TKD_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TKD_API __declspec(dllexport)
#else
#define TKD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define TKD_OK 0
#define TKD_ERR_INVALID_ARGUMENT (-1)
#define TKD_ERR_CONFIG (-2)
#define TKD_ERR_IO (-3)
#define TKD_ERR_RUNTIME (-4)

typedef struct tkd_model_s tkd_model_t;
typedef struct tkd_dataset_s tkd_dataset_t;

typedef struct tkd_dataset_info_s {
  int32_t period;
  int64_t rows;
  int64_t cols;
  int64_t positives;
  int32_t has_labels;
} tkd_dataset_info_t;

/* Library version string, e.g. "1.0.0". */
TKD_API const char* tkd_version(void);

/* Message of the last error on this thread; empty string if none. */
TKD_API const char* tkd_last_error(void);

TKD_API void tkd_string_free(char* s);

/* ---- datasets (binary period files) ---- */

TKD_API int tkd_dataset_load(const char* path, tkd_dataset_t** out);
TKD_API int tkd_dataset_info(const tkd_dataset_t* dataset, tkd_dataset_info_t* out);
/* Copies the feature matrix (row-major doubles, rows*cols entries). */
TKD_API int tkd_dataset_features(const tkd_dataset_t* dataset, double* out, size_t capacity);
/* Copies labels (0/1); fails if the dataset has none. */
TKD_API int tkd_dataset_labels(const tkd_dataset_t* dataset, int32_t* out, size_t capacity);
TKD_API void tkd_dataset_free(tkd_dataset_t* dataset);

/* ---- models (JSON artifacts: mlp, gbt, ensemble) ---- */

TKD_API int tkd_model_load(const char* path, tkd_model_t** out);
TKD_API int tkd_model_save(const tkd_model_t* model, const char* path);
TKD_API int tkd_model_kind(const tkd_model_t* model, char* buffer, size_t capacity);
TKD_API int tkd_model_feature_count(const tkd_model_t* model, int64_t* out);
/* Positive-class probability per row. `features` is row-major rows x cols. */
TKD_API int tkd_model_predict_positive(const tkd_model_t* model, const double* features,
                                       int64_t rows, int64_t cols, double* out_scores);
TKD_API void tkd_model_free(tkd_model_t* model);

/* ---- metrics ---- */

TKD_API int tkd_auprc(const double* scores, const int32_t* labels, int64_t n, double* out);
TKD_API int tkd_auroc(const double* scores, const int32_t* labels, int64_t n, double* out);

/* ---- workflows ----
 * config_json is a JSON object (see README for the per-command schema);
 * artifacts are written under out_dir. When summary_json is non-null it
 * receives a JSON summary of what was produced. */

TKD_API int tkd_cmd_synth(const char* config_json, const char* out_dir, char** summary_json);
TKD_API int tkd_cmd_preprocess(const char* config_json, const char* out_dir, char** summary_json);
TKD_API int tkd_cmd_train(const char* config_json, const char* out_dir, char** summary_json);
TKD_API int tkd_cmd_distill(const char* config_json, const char* out_dir, char** summary_json);
TKD_API int tkd_cmd_eval(const char* config_json, const char* out_dir, char** summary_json);
TKD_API int tkd_cmd_experiment(const char* config_json, const char* out_dir, char** summary_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TKD_TKD_H_ */
