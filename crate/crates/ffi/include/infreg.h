#ifndef INFREG_H
#define INFREG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum InfregStatus {
  INFREG_STATUS_OK = 0,
  INFREG_STATUS_CONFIG = 1,
  INFREG_STATUS_USAGE = 2,
  INFREG_STATUS_PRECONDITION = 3,
  INFREG_STATUS_VALIDATION = 4,
  INFREG_STATUS_SCHEMA = 5,
  INFREG_STATUS_DIVERGENCE = 6,
  INFREG_STATUS_IO = 7,
  INFREG_STATUS_NULL_POINTER = 8,
  INFREG_STATUS_INVALID_UTF8 = 9,
  INFREG_STATUS_PANIC = 10,
} InfregStatus;

typedef struct InfregDiceModel InfregDiceModel;

typedef struct InfregSiceModel InfregSiceModel;

typedef struct InfregStaticDataset InfregStaticDataset;

typedef struct InfregTrajectoryDataset InfregTrajectoryDataset;

/*
 Held-out evaluation metrics.
 */
typedef struct InfregMetrics {
  double rmse_y;
  double mae_y;
  double ate_error;
  double pehe;
  double auuc;
  double hsic_zt;
  double mi_probe;
  double kl_bottleneck;
} InfregMetrics;

typedef struct InfregBoundsResult {
  size_t trials;
  size_t violations;
  double worst_slack;
  double adversarial_max_ratio;
} InfregBoundsResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on this thread, or null. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *infreg_last_error(void);

/*
 Library version as a static nul-terminated string.
 */
const char *infreg_version(void);

/*
 Generates the static benchmark. `spec_json` may be null for defaults.
 `spec_json` is null or a nul-terminated string; `out_data` is writable.
 */
enum InfregStatus infreg_static_generate(const char *spec_json,
                                         struct InfregStaticDataset **out_data);

/*
 `path` is a nul-terminated string; `out_data` is writable.
 */
enum InfregStatus infreg_static_read_csv(const char *path, struct InfregStaticDataset **out_data);

/*
 Row count and widths of `x` and `t`; any output pointer may be null.
 `data` is a live handle.
 */
enum InfregStatus infreg_static_shape(const struct InfregStaticDataset *data,
                                      size_t *n,
                                      size_t *dx,
                                      size_t *dt);

/*
 Splits into leading `train_fraction` rows and the rest.
 `data` is a live handle; both output pointers are writable.
 */
enum InfregStatus infreg_static_split(const struct InfregStaticDataset *data,
                                      double train_fraction,
                                      struct InfregStaticDataset **out_train,
                                      struct InfregStaticDataset **out_test);

/*
 Copies the true effects into `out` of length `len` (must equal the row count).
 `data` is a live handle; `out` holds `len` doubles.
 */
enum InfregStatus infreg_static_true_ite(const struct InfregStaticDataset *data,
                                         double *out_buf,
                                         size_t len);

/*
 `data` is null or a handle from this library not yet freed.
 */
void infreg_static_free(struct InfregStaticDataset *data);

/*
 Generates trajectories. `spec_json` may be null for defaults.
 `spec_json` is null or nul-terminated; `out_data` is writable.
 */
enum InfregStatus infreg_dynamic_generate(const char *spec_json,
                                          struct InfregTrajectoryDataset **out_data);

/*
 `path` is nul-terminated; `out_data` is writable.
 */
enum InfregStatus infreg_dynamic_read_csv(const char *path,
                                          struct InfregTrajectoryDataset **out_data);

/*
 `data` is a live handle; both output pointers are writable.
 */
enum InfregStatus infreg_dynamic_split(const struct InfregTrajectoryDataset *data,
                                       double train_fraction,
                                       struct InfregTrajectoryDataset **out_train,
                                       struct InfregTrajectoryDataset **out_test);

/*
 `data` is null or a live handle.
 */
void infreg_dynamic_free(struct InfregTrajectoryDataset *data);

/*
 Trains the static estimator. `config_json` may be null for defaults.
 `train` is a live handle; `config_json` is null or nul-terminated;
 `out_model` is writable.
 */
enum InfregStatus infreg_sice_train(const struct InfregStaticDataset *train,
                                    const char *config_json,
                                    struct InfregSiceModel **out_model);

/*
 Effect of `t` against `t_alt` for each of `n` rows, averaged over `samples`
 shared draws of the representation. `x` is `n x dx`, `t` and `t_alt` are
 `n x dt`, `out` holds `n` values.
 All buffers hold the stated number of doubles; `model` is a live handle.
 */
enum InfregStatus infreg_sice_predict_ite(const struct InfregSiceModel *model,
                                          const double *x,
                                          const double *t,
                                          const double *t_alt,
                                          size_t n,
                                          size_t samples,
                                          uint64_t seed,
                                          double *out_buf);

/*
 Handles are live; `out_metrics` is writable.
 */
enum InfregStatus infreg_sice_evaluate(const struct InfregSiceModel *model,
                                       const struct InfregStaticDataset *train,
                                       const struct InfregStaticDataset *test,
                                       struct InfregMetrics *out_metrics);

/*
 Number of completed epochs; the per-epoch totals go to `out` when its
 `len` is at least that count.
 `model` is live; `out` is null or holds `len` doubles; `epochs` is writable.
 */
enum InfregStatus infreg_sice_history(const struct InfregSiceModel *model,
                                      double *out_buf,
                                      size_t len,
                                      size_t *epochs);

/*
 `model` is null or a live handle.
 */
void infreg_sice_free(struct InfregSiceModel *model);

/*
 Trains the sequential estimator. `config_json` may be null for defaults.
 `train` is live; `config_json` is null or nul-terminated; `out_model` is writable.
 */
enum InfregStatus infreg_dice_train(const struct InfregTrajectoryDataset *train,
                                    const char *config_json,
                                    struct InfregDiceModel **out_model);

/*
 Handles are live; `out_metrics` is writable.
 */
enum InfregStatus infreg_dice_evaluate(const struct InfregDiceModel *model,
                                       const struct InfregTrajectoryDataset *train,
                                       const struct InfregTrajectoryDataset *test,
                                       struct InfregMetrics *out_metrics);

/*
 `model` is null or a live handle.
 */
void infreg_dice_free(struct InfregDiceModel *model);

/*
 Randomized check of the finite-table inequalities.
 `out_result` is writable.
 */
enum InfregStatus infreg_bounds_run(size_t trials,
                                    uint64_t seed,
                                    struct InfregBoundsResult *out_result);

/*
 Root mean squared difference between two effect vectors of length `n`.
 Both buffers hold `n` doubles; `out_value` is writable.
 */
enum InfregStatus infreg_pehe(const double *ite_hat,
                              const double *ite_true,
                              size_t n,
                              double *out_value);

/*
 Biased HSIC with median-heuristic Gaussian kernels; `z` is `n x dz`, `t` is `n x dt`.
 Buffers hold the stated number of doubles; `out_value` is writable.
 */
enum InfregStatus infreg_hsic(const double *z,
                              size_t dz,
                              const double *t,
                              size_t dt,
                              size_t n,
                              double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INFREG_H */
