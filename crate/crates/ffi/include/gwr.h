#ifndef GWR_H
#define GWR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Largest temporal depth representable in [`GwrHyperParams`].
 */
#define GWR_MAX_DEPTH 7

/*
 Length of the `alpha` array, `GWR_MAX_DEPTH + 1`.
 */
#define GWR_ALPHA_LEN 8

typedef enum GwrStatus {
  GWR_STATUS_OK = 0,
  GWR_STATUS_NULL_POINTER = 1,
  GWR_STATUS_INVALID_ARGUMENT = 2,
  GWR_STATUS_DIMENSION_MISMATCH = 3,
  GWR_STATUS_UNKNOWN_NEURON = 4,
  GWR_STATUS_INVALID_STATE = 5,
  GWR_STATUS_IO = 6,
  GWR_STATUS_PARSE = 7,
  GWR_STATUS_BUFFER_TOO_SMALL = 8,
  GWR_STATUS_PANIC = 9,
} GwrStatus;

/*
 Opaque model handle.
 */
typedef struct GwrModel GwrModel;

/*
 Model hyperparameters. `alpha` holds `depth + 1` weights; the rest are ignored.
 */
typedef struct GwrHyperParams {
  double insertion_threshold;
  double habituation_threshold;
  double tau_b;
  double tau_n;
  double kappa;
  double eps_b;
  double eps_n;
  double beta;
  uint32_t depth;
  double alpha[GWR_ALPHA_LEN];
  size_t n_max;
  /*
   Use the literal context rule instead of the recursive one.
   */
  bool literal_context;
} GwrHyperParams;

/*
 Result of one training step.
 */
typedef struct GwrStepOutcome {
  uint32_t bmu;
  uint32_t second;
  double distance;
  double activity;
  bool inserted;
  /*
   Id of the new neuron when `inserted` is set.
   */
  uint32_t inserted_id;
  size_t neuron_count;
} GwrStepOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last error raised on this thread, or null if none.

 The pointer stays valid until the next failing call on the same thread.
 */
const char *gwr_last_error_message(void);

/*
 Fills `out` with the default hyperparameters.

 # Safety
 `out` must be null or point to writable memory for one `GwrHyperParams`.
 */
enum GwrStatus gwr_hyper_default(struct GwrHyperParams *out);

/*
 Creates a growing network seeded with two input vectors of length `dim`.

 # Safety
 `hyper` must point to a valid struct, `first` and `second` to `dim`
 readable doubles, and `out` to a writable handle slot.
 */
enum GwrStatus gwr_model_new_growing(const struct GwrHyperParams *hyper,
                                     size_t dim,
                                     const double *first,
                                     const double *second,
                                     struct GwrModel **out);

/*
 Creates a static network of `n_max` neurons drawn uniformly within
 `[low, high]` per dimension.

 # Safety
 As for `gwr_model_new_growing`, with `low` and `high` of length `dim`.
 */
enum GwrStatus gwr_model_new_static(const struct GwrHyperParams *hyper,
                                    size_t dim,
                                    const double *low,
                                    const double *high,
                                    uint64_t seed,
                                    struct GwrModel **out);

/*
 Releases a handle. Null is ignored.

 # Safety
 `model` must be null or a handle not yet freed.
 */
void gwr_model_free(struct GwrModel *model);

/*
 Presents one frame. `label` may be null for unlabeled input; `out` may be null.

 # Safety
 `model` must be a live handle, `input` must hold `len` doubles, `label`
 must be null or a NUL-terminated string, `out` null or writable.
 */
enum GwrStatus gwr_model_step(struct GwrModel *model,
                              const double *input,
                              size_t len,
                              const char *label,
                              struct GwrStepOutcome *out);

/*
 Clears the training context; call between sequences.

 # Safety
 `model` must be a live handle.
 */
enum GwrStatus gwr_model_reset_context(struct GwrModel *model);

/*
 Clears the classification context; call between test sequences.

 # Safety
 `model` must be a live handle.
 */
enum GwrStatus gwr_model_reset_eval_context(struct GwrModel *model);

/*
 Classifies one frame without changing the model.

 The predicted label is copied NUL-terminated into `buf` (capacity
 `buf_len`); `*found` is false and `buf` holds an empty string when the
 winner has no label. `*needed` receives the buffer size the label
 requires; when it exceeds `buf_len` the call fails with
 `GWR_STATUS_BUFFER_TOO_SMALL` and the classification context is left
 unchanged, so the call can be retried.

 # Safety
 `model` must be a live handle, `input` must hold `len` doubles, `buf`
 must have `buf_len` writable bytes, `found` and `needed` must be writable.
 */
enum GwrStatus gwr_model_classify(struct GwrModel *model,
                                  const double *input,
                                  size_t len,
                                  char *buf,
                                  size_t buf_len,
                                  bool *found,
                                  size_t *needed);

/*
 Runs one replay episode; `steps` (nullable) receives the number of
 replayed patterns.

 # Safety
 `model` must be a live handle and `steps` null or writable.
 */
enum GwrStatus gwr_model_replay(struct GwrModel *model, size_t *steps);

/*
 # Safety
 `model` must be a live handle and `out` writable.
 */
enum GwrStatus gwr_model_neuron_count(const struct GwrModel *model, size_t *out);

/*
 # Safety
 `model` must be a live handle and `out` writable.
 */
enum GwrStatus gwr_model_dim(const struct GwrModel *model, size_t *out);

/*
 Copies the weight vector of neuron `id` into `out` (capacity `len`, which
 must equal the input dimension).

 # Safety
 `model` must be a live handle and `out` must have `len` writable doubles.
 */
enum GwrStatus gwr_model_weight(const struct GwrModel *model, uint32_t id, double *out, size_t len);

/*
 Writes a JSON snapshot of the model to `path`.

 # Safety
 `model` must be a live handle and `path` a NUL-terminated UTF-8 string.
 */
enum GwrStatus gwr_model_save(const struct GwrModel *model, const char *path);

/*
 Loads a snapshot written by `gwr_model_save` or the command line.

 # Safety
 `path` must be a NUL-terminated UTF-8 string and `out` a writable handle slot.
 */
enum GwrStatus gwr_model_load(const char *path, struct GwrModel **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GWR_H */
