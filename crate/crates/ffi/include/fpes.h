#ifndef FPES_H
#define FPES_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Perturbation source of a training run.
 */
typedef enum FpesNoise {
  FPES_NOISE_COUNTER = 0,
  FPES_NOISE_LFSR_UNIFORM = 1,
  FPES_NOISE_LFSR_CLT = 2,
} FpesNoise;

/**
 * Result of every fallible call.
 */
typedef enum FpesStatus {
  FPES_STATUS_OK = 0,
  FPES_STATUS_NULL_POINTER = 1,
  FPES_STATUS_INVALID_ARGUMENT = 2,
  FPES_STATUS_CONFIG = 3,
  FPES_STATUS_CHECKPOINT = 4,
  FPES_STATUS_DATA = 5,
  FPES_STATUS_DIVERGED = 6,
  FPES_STATUS_STATE_MISMATCH = 7,
  FPES_STATUS_IO = 8,
  FPES_STATUS_BUFFER_TOO_SMALL = 9,
  FPES_STATUS_PANIC = 10,
} FpesStatus;

/**
 * Opaque labeled dataset.
 */
typedef struct FpesDataset FpesDataset;

/**
 * Opaque network.
 */
typedef struct FpesModel FpesModel;

/**
 * Opaque resumable training run. Owns copies of its model and data.
 */
typedef struct FpesTrainer FpesTrainer;

/**
 * ES settings. Fill with [`fpes_train_config_default`] and adjust.
 */
typedef struct FpesTrainConfig {
  uint32_t population;
  uint32_t iterations;
  double sigma;
  double alpha;
  uint64_t seed;
  /**
   * Index of the layer whose weights and biases are retrained.
   */
  uint32_t layer;
  /**
   * 0 selects the float path.
   */
  uint32_t precision_total_bits;
  uint32_t precision_frac_bits;
  /**
   * Nonzero rounds member losses to powers of two (fixed path only).
   */
  uint8_t loss_po2;
  /**
   * An [`FpesNoise`] value.
   */
  uint32_t noise;
  /**
   * Nonzero pairs members as `(eps, -eps)`.
   */
  uint8_t mirrored;
  /**
   * Nonzero rounds fixed-point weight updates stochastically.
   */
  uint8_t stochastic_rounding;
  /**
   * Evaluation threads; results do not depend on it.
   */
  uint32_t workers;
} FpesTrainConfig;

/**
 * Timing and sizing inputs of the hardware model.
 */
typedef struct FpesHwParams {
  double t_f;
  double t_l;
  double t_g;
  double t_u;
  uint64_t w;
  uint64_t p;
  uint64_t m;
  uint64_t n;
  uint64_t k;
} FpesHwParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the message of the last failed call on this thread into `buf`
 * (NUL-terminated, truncated to `cap`) and returns its full length
 * excluding the terminator. Returns 0 when the last call succeeded.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes.
 */
size_t fpes_last_error_message(char *buf, size_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fpes_version(void);

/**
 * Loads a checkpoint file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum FpesStatus fpes_model_load(const char *path, struct FpesModel **out);

/**
 * Writes a checkpoint file.
 *
 * # Safety
 * `model` must be a live handle and `path` a NUL-terminated string.
 */
enum FpesStatus fpes_model_save(const struct FpesModel *model, const char *path);

/**
 * Decodes a checkpoint from memory.
 *
 * # Safety
 * `bytes` must be valid for `len` bytes; `out` must be writable.
 */
enum FpesStatus fpes_model_from_bytes(const uint8_t *bytes, size_t len, struct FpesModel **out);

/**
 * Encodes a model as checkpoint bytes. With a null or short buffer the
 * call fails with `BufferTooSmall` and `len_out` holds the needed size.
 *
 * # Safety
 * `model` must be a live handle, `buf` valid for `cap` bytes, `len_out`
 * writable.
 */
enum FpesStatus fpes_model_to_bytes(const struct FpesModel *model,
                                    uint8_t *buf,
                                    size_t cap,
                                    size_t *len_out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void fpes_model_free(struct FpesModel *model);

/**
 * Input width and class count.
 *
 * # Safety
 * `model` must be a live handle; outputs must be writable.
 */
enum FpesStatus fpes_model_shape(const struct FpesModel *model,
                                 size_t *input_dim,
                                 size_t *num_classes);

/**
 * Runs one forward pass and writes `num_classes` real-valued outputs.
 *
 * # Safety
 * `input` must hold `input_len` floats and `outputs` `outputs_len` doubles.
 */
enum FpesStatus fpes_model_forward(const struct FpesModel *model,
                                   const float *input,
                                   size_t input_len,
                                   uint32_t total_bits,
                                   uint32_t frac_bits,
                                   double *outputs,
                                   size_t outputs_len);

/**
 * Predicted class of one input.
 *
 * # Safety
 * `input` must hold `input_len` floats; `class_out` must be writable.
 */
enum FpesStatus fpes_model_predict(const struct FpesModel *model,
                                   const float *input,
                                   size_t input_len,
                                   uint32_t total_bits,
                                   uint32_t frac_bits,
                                   size_t *class_out);

/**
 * Builds a dataset from `count` row-major samples of `dim` features in
 * `[0, 1]` and their labels.
 *
 * # Safety
 * `features` must hold `count * dim` floats and `labels` `count` bytes.
 */
enum FpesStatus fpes_dataset_new(size_t dim,
                                 size_t num_classes,
                                 const float *features,
                                 const uint8_t *labels,
                                 size_t count,
                                 struct FpesDataset **out);

/**
 * # Safety
 * `data` must be null or a handle not yet freed.
 */
void fpes_dataset_free(struct FpesDataset *data);

/**
 * Fraction of samples classified correctly.
 *
 * # Safety
 * Handles must be live; `accuracy_out` must be writable.
 */
enum FpesStatus fpes_accuracy(const struct FpesModel *model,
                              const struct FpesDataset *data,
                              uint32_t total_bits,
                              uint32_t frac_bits,
                              double *accuracy_out);

/**
 * Desk defaults: N = 100, k = 100, sigma = 0.05, alpha = 0.01, layer 0,
 * float path, counter noise, independent sampling, one worker.
 *
 * # Safety
 * `out` must be writable.
 */
enum FpesStatus fpes_train_config_default(struct FpesTrainConfig *out);

/**
 * Starts a training run on copies of `model` and `data`.
 *
 * # Safety
 * Handles and `config` must be valid; `out` must be writable.
 */
enum FpesStatus fpes_trainer_new(const struct FpesModel *model,
                                 const struct FpesDataset *data,
                                 const struct FpesTrainConfig *config,
                                 struct FpesTrainer **out);

/**
 * Continues a run from a state blob produced by [`fpes_trainer_state`].
 * The configuration must match the one the state was written with.
 *
 * # Safety
 * Handles and `config` must be valid, `state` valid for `len` bytes and
 * `out` writable.
 */
enum FpesStatus fpes_trainer_resume(const struct FpesModel *model,
                                    const struct FpesDataset *data,
                                    const struct FpesTrainConfig *config,
                                    const uint8_t *state,
                                    size_t len,
                                    struct FpesTrainer **out);

/**
 * Runs up to `iterations` more iterations; `done_out` (optional) receives
 * the number of completed iterations afterwards.
 *
 * # Safety
 * `trainer` must be a live handle; `done_out` null or writable.
 */
enum FpesStatus fpes_trainer_run(struct FpesTrainer *trainer,
                                 uint32_t iterations,
                                 uint32_t *done_out);

/**
 * Completed iterations and the mean population reward of the last one
 * (0 before the first).
 *
 * # Safety
 * `trainer` must be a live handle; outputs must be writable.
 */
enum FpesStatus fpes_trainer_progress(const struct FpesTrainer *trainer,
                                      uint32_t *done_out,
                                      double *last_reward_out,
                                      uint64_t *forward_passes_out);

/**
 * Serialized trainer state; same buffer protocol as
 * [`fpes_model_to_bytes`].
 *
 * # Safety
 * `trainer` must be a live handle, `buf` valid for `cap` bytes, `len_out`
 * writable.
 */
enum FpesStatus fpes_trainer_state(const struct FpesTrainer *trainer,
                                   uint8_t *buf,
                                   size_t cap,
                                   size_t *len_out);

/**
 * The model with the current trained weights, as a new handle.
 *
 * # Safety
 * `trainer` must be a live handle; `out` must be writable.
 */
enum FpesStatus fpes_trainer_model(const struct FpesTrainer *trainer, struct FpesModel **out);

/**
 * # Safety
 * `trainer` must be null or a handle not yet freed.
 */
void fpes_trainer_free(struct FpesTrainer *trainer);

/**
 * Seconds for one iteration on one image, with exact and rounded-up
 * `W / P`.
 *
 * # Safety
 * `params` must be valid; outputs must be writable.
 */
enum FpesStatus fpes_hw_iteration_time(const struct FpesHwParams *params,
                                       double *seconds_out,
                                       double *ceil_seconds_out);

/**
 * Seconds for a whole run counting forward passes.
 *
 * # Safety
 * `params` must be valid; outputs must be writable.
 */
enum FpesStatus fpes_hw_total_training_time(const struct FpesHwParams *params,
                                            double *seconds_out,
                                            double *ceil_seconds_out);

/**
 * LUT and FF counts of `blocks` training blocks on the default part.
 *
 * # Safety
 * Outputs must be writable.
 */
enum FpesStatus fpes_hw_area(uint64_t blocks,
                             uint8_t include_loss_accumulator,
                             uint64_t *lut_out,
                             uint64_t *ff_out,
                             double *lut_pct_out,
                             double *ff_pct_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FPES_H */
