#ifndef RAE_PINN_H
#define RAE_PINN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible function.
 */
typedef enum RaeStatus {
  RaeOk = 0,
  RaeErrNullPointer = 1,
  RaeErrUtf8 = 2,
  RaeErrInvalidArgument = 3,
  RaeErrConfig = 4,
  RaeErrNumerical = 5,
  RaeErrIo = 6,
  RaeErrMismatch = 7,
  RaeErrMissingPrerequisite = 8,
  RaeErrPanic = 9,
} RaeStatus;

/**
 * Opaque experiment configuration.
 */
typedef struct RaeConfig RaeConfig;

/**
 * Opaque spectral reference solution.
 */
typedef struct RaeGrid RaeGrid;

/**
 * Opaque trained model (network weights plus provenance).
 */
typedef struct RaeModel RaeModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rae_version(void);

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *rae_last_error(void);

/**
 * Parse a TOML experiment description (may name a preset and override
 * fields) into a validated configuration.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RaeStatus rae_config_from_toml(const char *text, struct RaeConfig **out);

/**
 * Load one of the built-in presets: ac1d_i1, ac1d_i2, ac2d, ch1d, ch2d.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RaeStatus rae_config_preset(const char *name, struct RaeConfig **out);

/**
 * # Safety
 * `cfg` must come from this library; passing it again is undefined.
 */
void rae_config_free(struct RaeConfig *cfg);

/**
 * Override the RNG seed of a configuration.
 *
 * # Safety
 * `cfg` must be a live handle from this library.
 */
enum RaeStatus rae_config_set_seed(struct RaeConfig *cfg, uint64_t seed);

/**
 * Write the config's SHA-256 hash as 64 hex characters plus NUL.
 * `buf_len` must be at least 65.
 *
 * # Safety
 * `cfg` must be a live handle; `buf` must point to `buf_len` bytes.
 */
enum RaeStatus rae_config_hash_hex(const struct RaeConfig *cfg, char *buf, uintptr_t buf_len);

/**
 * Solve the configured problem with the pseudo-spectral reference solver.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum RaeStatus rae_reference_solve(const struct RaeConfig *cfg, struct RaeGrid **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RaeStatus rae_grid_load(const char *path, struct RaeGrid **out);

/**
 * # Safety
 * `grid` must be a live handle; `path` a NUL-terminated string.
 */
enum RaeStatus rae_grid_save(const struct RaeGrid *grid, const char *path);

/**
 * # Safety
 * `grid` must come from this library; passing it again is undefined.
 */
void rae_grid_free(struct RaeGrid *grid);

/**
 * Interpolate the reference solution at `n` space-time points given
 * row-major as (x..., t) with `point_dim` = space dimension + 1.
 * Writes `n` values to `out_values`.
 *
 * # Safety
 * `points` must hold `n * point_dim` doubles and `out_values` `n` doubles.
 */
enum RaeStatus rae_grid_evaluate(const struct RaeGrid *grid,
                                 const double *points,
                                 uintptr_t n,
                                 uintptr_t point_dim,
                                 double *out_values);

/**
 * Train a network under the given configuration. `reference` may be null;
 * when provided (and matching the problem) the training log tracks
 * relative L2 errors against it.
 *
 * # Safety
 * `cfg` must be a live handle; `reference` null or a live handle; `out`
 * a valid pointer.
 */
enum RaeStatus rae_train(const struct RaeConfig *cfg,
                         const struct RaeGrid *reference,
                         struct RaeModel **out);

/**
 * # Safety
 * `model` must come from this library; passing it again is undefined.
 */
void rae_model_free(struct RaeModel *model);

/**
 * # Safety
 * `model` must be a live handle; `path` a NUL-terminated string.
 */
enum RaeStatus rae_model_save(const struct RaeModel *model, const char *path);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RaeStatus rae_model_load(const char *path, struct RaeModel **out);

/**
 * Evaluate the network at `n` space-time points given row-major as
 * (x..., t) with `point_dim` matching the network input dimension.
 * Writes `n` values (the first network output) to `out_values`.
 *
 * # Safety
 * `points` must hold `n * point_dim` doubles and `out_values` `n` doubles.
 */
enum RaeStatus rae_model_predict(const struct RaeModel *model,
                                 const double *points,
                                 uintptr_t n,
                                 uintptr_t point_dim,
                                 double *out_values);

/**
 * Relative L2 error of the model against a reference grid over every
 * stored snapshot. Refuses grids solving a different problem.
 *
 * # Safety
 * `model` and `grid` must be live handles; `out_error` a valid pointer.
 */
enum RaeStatus rae_model_relative_l2(const struct RaeModel *model,
                                     const struct RaeGrid *grid,
                                     double *out_error);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* RAE_PINN_H */
