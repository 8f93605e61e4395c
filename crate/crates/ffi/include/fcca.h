#ifndef FCCA_H
#define FCCA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FccaStatus {
  FCCA_STATUS_OK = 0,
  FCCA_STATUS_INVALID_ARGUMENT = 1,
  FCCA_STATUS_CONFIG = 2,
  FCCA_STATUS_DATA = 3,
  FCCA_STATUS_INFEASIBLE = 4,
  FCCA_STATUS_IO = 5,
  FCCA_STATUS_INTERNAL = 6,
} FccaStatus;

// A scaled dataset.
typedef struct FccaDataset FccaDataset;

// A target model with its scaler and per-feature resolution.
typedef struct FccaModel FccaModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next call into this library on the same thread.
const char *fcca_last_error(void);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void fcca_string_free(char *s);

// Loads a CSV and scales it to `[0, 1]`. `label` may be null for the last column.
//
// # Safety
// `path` and a non-null `label` must be NUL-terminated; `out` must be writable.
enum FccaStatus fcca_dataset_load(const char *path, const char *label, struct FccaDataset **out);

// # Safety
// `ds` must be null or a handle from this library, freed at most once.
void fcca_dataset_free(struct FccaDataset *ds);

// Row count; 0 for null.
//
// # Safety
// `ds` must be null or a live handle.
size_t fcca_dataset_n_rows(const struct FccaDataset *ds);

// Retained feature count; 0 for null.
//
// # Safety
// `ds` must be null or a live handle.
size_t fcca_dataset_n_features(const struct FccaDataset *ds);

// Gradient boosting on the whole dataset.
//
// # Safety
// `ds` must be a live handle; `out` must be writable.
enum FccaStatus fcca_model_train_gb(const struct FccaDataset *ds,
                                    size_t n_estimators,
                                    size_t max_depth,
                                    double learning_rate,
                                    struct FccaModel **out);

// Random forest on the whole dataset.
//
// # Safety
// `ds` must be a live handle; `out` must be writable.
enum FccaStatus fcca_model_train_rf(const struct FccaDataset *ds,
                                    size_t n_trees,
                                    size_t max_depth,
                                    uint64_t seed,
                                    struct FccaModel **out);

// # Safety
// `model` must be a live handle; `path` NUL-terminated.
enum FccaStatus fcca_model_save(const struct FccaModel *model, const char *path);

// # Safety
// `path` NUL-terminated; `out` writable.
enum FccaStatus fcca_model_load(const char *path, struct FccaModel **out);

// # Safety
// `model` must be null or a handle from this library, freed at most once.
void fcca_model_free(struct FccaModel *model);

// Feature count of the model; 0 for null.
//
// # Safety
// `model` must be null or a live handle.
size_t fcca_model_n_features(const struct FccaModel *model);

// Predicts a scaled input of `len` values. `label` and `probability`
// (class-1 probability) may be null.
//
// # Safety
// `x` must point to `len` doubles; non-null outputs must be writable.
enum FccaStatus fcca_model_predict(const struct FccaModel *model,
                                   const double *x,
                                   size_t len,
                                   uint8_t *label,
                                   double *probability);

// Minimum-cost counterfactual of scaled `x0` with costs
// `lambda0 * changed + lambda1 * |d|_1 + lambda2 * |d|^2`, box `[0, 1]` and
// the model's stored resolution. Writes the counterfactual into `x_ce`
// (`len` doubles, equal to `x0` when infeasible), its cost, and
// `*optimal = 1` when found, 0 when no counterfactual exists.
//
// # Safety
// `x0` and `x_ce` must point to `len` doubles; `cost` and `optimal` writable.
enum FccaStatus fcca_counterfactual(const struct FccaModel *model,
                                    const double *x0,
                                    size_t len,
                                    double lambda0,
                                    double lambda1,
                                    double lambda2,
                                    double *x_ce,
                                    double *cost,
                                    int32_t *optimal);

// Runs the cross-validated pipeline. `config` is config-file text (may be
// null for defaults); a non-null `dataset` overrides its dataset path. On
// success `*report_json` receives the report, to be released with
// [`fcca_string_free`].
//
// # Safety
// Non-null strings NUL-terminated; `report_json` writable.
enum FccaStatus fcca_run_pipeline(const char *config, const char *dataset, char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FCCA_H */
