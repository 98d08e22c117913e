/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef PLUMETARGET_H
#define PLUMETARGET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  PDT_STATUS_OK = 0,
  PDT_STATUS_NULL_POINTER = 1,
  PDT_STATUS_INVALID_ARGUMENT = 2,
  PDT_STATUS_IO = 3,
  PDT_STATUS_FORMAT = 4,
  PDT_STATUS_CONTRACT_VIOLATION = 5,
  PDT_STATUS_PANIC = 6,
} PdtStatus;

typedef struct PdtMask PdtMask;

typedef struct PdtModel PdtModel;

typedef struct PdtScene PdtScene;

typedef struct PdtTrajectory PdtTrajectory;

/**
 * Trajectory scores against a scene's ground truth.
 */
typedef struct {
  size_t pixels_observed;
  size_t distinct_pixels;
  double ratio_plume;
  double mean_intensity;
  double mean_gradient;
  /**
   * Non-zero for an empty trajectory.
   */
  uint8_t degenerate;
} PdtMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, empty after a success.
 * The pointer stays valid until the next `pdt_*` call on this thread.
 */
const char *pdt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pdt_version(void);

PdtStatus pdt_scene_load(const char *manifest_path, PdtScene **out);

void pdt_scene_free(PdtScene *scene);

PdtStatus pdt_scene_dims(const PdtScene *scene, size_t *width, size_t *height);

/**
 * Ground-truth label of a scene as a new mask.
 */
PdtStatus pdt_scene_label(const PdtScene *scene, PdtMask **out);

PdtStatus pdt_model_load(const char *path, PdtModel **out);

void pdt_model_free(PdtModel *model);

PdtStatus pdt_classify(const PdtModel *model, const PdtScene *scene, PdtMask **out);

/**
 * Loads a binary PGM mask, e.g. the output of an external segmenter.
 */
PdtStatus pdt_mask_load(const char *path, PdtMask **out);

PdtStatus pdt_mask_save(const PdtMask *mask, const char *path);

void pdt_mask_free(PdtMask *mask);

PdtStatus pdt_mask_dims(const PdtMask *mask, size_t *width, size_t *height);

PdtStatus pdt_mask_count(const PdtMask *mask, size_t *count);

/**
 * Copies the mask row-major into `buf` as 0/1 bytes. `len` must be at
 * least width * height.
 */
PdtStatus pdt_mask_copy(const PdtMask *mask, uint8_t *buf, size_t len);

PdtStatus pdt_denoise(const PdtMask *mask,
                      size_t max_merge_iterations,
                      double min_area_fraction,
                      PdtMask **out);

/**
 * Plans over an already denoised mask. `algorithm` is one of the CLI names
 * (e.g. `"lawnmower-transect"`); the step is 1% of `scene_width`, or of
 * the mask width when `scene_width` is 0.
 */
PdtStatus pdt_plan(const PdtMask *mask,
                   const char *algorithm,
                   size_t scene_width,
                   PdtTrajectory **out);

void pdt_trajectory_free(PdtTrajectory *traj);

PdtStatus pdt_trajectory_len(const PdtTrajectory *traj, size_t *len);

/**
 * Writes waypoints as interleaved `x, y` pairs. `capacity` counts
 * waypoints, so `xy` must hold `2 * capacity` integers.
 */
PdtStatus pdt_trajectory_waypoints(const PdtTrajectory *traj, int32_t *xy, size_t capacity);

/**
 * Scores `count` interleaved `x, y` waypoints against the scene's label.
 */
PdtStatus pdt_evaluate_waypoints(const PdtScene *scene,
                                 const int32_t *xy,
                                 size_t count,
                                 PdtMetrics *out);

PdtStatus pdt_evaluate(const PdtTrajectory *traj, const PdtScene *scene, PdtMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLUMETARGET_H */
