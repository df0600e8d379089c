/*
 * Copyright 2026 The DualSplat Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the DualSplat library: Gaussian splat rendering, synthetic
 * pseudo-label datasets and uncertainty-aware training.
 *
 * Objects are opaque handles released with their matching *_free function.
 * Every fallible call returns a ds_status; on failure a message for the
 * calling thread is available from ds_last_error().
 */

#ifndef DUALSPLAT_DUALSPLAT_H_
#define DUALSPLAT_DUALSPLAT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(DS_BUILDING_LIBRARY)
#define DS_API __attribute__((visibility("default")))
#else
#define DS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ds_status {
  DS_OK = 0,
  DS_ERR_INVALID_ARGUMENT = 1,
  DS_ERR_DEGENERATE_ROTATION = 2,
  DS_ERR_PARSE = 3,
  DS_ERR_TRUNCATED_PAYLOAD = 4,
  DS_ERR_UNKNOWN_VERSION = 5,
  DS_ERR_INTEGRITY = 6,
  DS_ERR_IO = 7,
  DS_ERR_CONFIG = 8,
  DS_ERR_SCHEDULE = 9,
  DS_ERR_INTERNAL = 10
} ds_status;

DS_API const char* ds_status_string(ds_status status);
/* Message of the last failed call on this thread ("" if none). */
DS_API const char* ds_last_error(void);
DS_API const char* ds_version(void);

/* Worker threads for rendering; 0 restores the default (GS_THREADS or all cores). */
DS_API void ds_set_threads(int threads);

/* Orbit camera looking at the origin; angles in degrees, z is up. */
typedef struct ds_camera {
  double azimuth;
  double elevation;
  double radius;
  double fov_y;
  int width;
  int height;
} ds_camera;

/* Radius 4, vertical field of view 33.8 degrees, 64x64. */
DS_API ds_camera ds_camera_default(void);

/* Camera k of n on an orbit with azimuth 360 k / n and elevation
 * amplitude * sin(azimuth); other fields come from `base`. */
DS_API ds_status ds_orbit_camera(const ds_camera* base, int n, int k, double amplitude,
                                 ds_camera* out);

/* ---- Gaussian clouds ---------------------------------------------------- */

typedef struct ds_cloud ds_cloud;

DS_API ds_status ds_cloud_load(const char* ply_path, ds_cloud** out);
DS_API ds_status ds_cloud_save(const ds_cloud* cloud, const char* ply_path);
DS_API size_t ds_cloud_size(const ds_cloud* cloud);
DS_API void ds_cloud_free(ds_cloud* cloud);

/* ---- Rendering ---------------------------------------------------------- */

typedef struct ds_image ds_image;

/* Renders on a constant background (NULL means white). */
DS_API ds_status ds_render(const ds_cloud* cloud, const ds_camera* camera,
                           const double background[3], ds_image** out);
DS_API int ds_image_width(const ds_image* image);
DS_API int ds_image_height(const ds_image* image);
DS_API int ds_image_channels(const ds_image* image);
/* Row-major, channel-interleaved values. */
DS_API const double* ds_image_data(const ds_image* image);
/* 8-bit PNG; values are clamped to [0, 1]. */
DS_API ds_status ds_image_save_png(const ds_image* image, const char* path);
DS_API void ds_image_free(ds_image* image);

/* ---- Training configuration -------------------------------------------- */

typedef struct ds_config ds_config;

/* Built-in defaults. */
DS_API ds_status ds_config_create(ds_config** out);
/* Applies the key = value assignments of a file on top of `config`. */
DS_API ds_status ds_config_load(ds_config* config, const char* path);
DS_API ds_status ds_config_set(ds_config* config, const char* key, const char* value);
/* Copies the value (NUL-terminated) into `buffer`; `required` receives the
 * size needed including the terminator. A short buffer gives
 * DS_ERR_INVALID_ARGUMENT. */
DS_API ds_status ds_config_get(const ds_config* config, const char* key, char* buffer,
                               size_t buffer_size, size_t* required);
DS_API ds_status ds_config_validate(const ds_config* config);
DS_API ds_status ds_config_save(const ds_config* config, const char* path);
DS_API size_t ds_config_key_count(void);
DS_API const char* ds_config_key(size_t index);
DS_API void ds_config_free(ds_config* config);

/* ---- Datasets ----------------------------------------------------------- */

typedef struct ds_dataset_options {
  const char* scene_spec_path; /* JSON scene spec; NULL for the sphere and box default */
  double geometry_jitter;      /* per-view position noise std */
  double color_jitter;         /* per-view color noise std */
  uint64_t seed;               /* scene sampling and per-view noise */
  int width;
  int height;
  int frames_per_orbit;
  int heldout_views;
} ds_dataset_options;

/* No jitter, seed 0, 64x64, 21 frames per orbit, 36 held-out views. */
DS_API ds_dataset_options ds_dataset_options_default(void);
/* Renders three orbits (elevation amplitudes 0, -20 and 40 degrees) plus
 * held-out truth views and writes the dataset directory. */
DS_API ds_status ds_dataset_generate(const ds_dataset_options* options, const char* out_dir);

typedef struct ds_dataset ds_dataset;

DS_API ds_status ds_dataset_load(const char* dir, ds_dataset** out);
DS_API size_t ds_dataset_frame_count(const ds_dataset* dataset);
DS_API ds_status ds_dataset_camera(const ds_dataset* dataset, size_t frame, ds_camera* out);
DS_API int ds_dataset_frame_orbit(const ds_dataset* dataset, size_t frame);
DS_API int ds_dataset_consistent(const ds_dataset* dataset);
DS_API size_t ds_dataset_heldout_count(const ds_dataset* dataset);
/* Copy of the unperturbed scene. */
DS_API ds_status ds_dataset_truth(const ds_dataset* dataset, ds_cloud** out);
DS_API void ds_dataset_free(ds_dataset* dataset);

/* ---- Training ----------------------------------------------------------- */

typedef struct ds_step_info {
  int iteration; /* zero-based index of the step just taken */
  double l1_u_model1;
  double l1_u_model2;
  double d_ssim;
  double lpips;
  double total;
  double resolution_ratio;
  size_t view;
} ds_step_info;

typedef struct ds_trainer ds_trainer;

/* In-memory trainer; `config` and `dataset` are copied. */
DS_API ds_status ds_trainer_create(const ds_config* config, const ds_dataset* dataset,
                                   ds_trainer** out);
DS_API ds_status ds_trainer_step(ds_trainer* trainer, ds_step_info* info);
DS_API int ds_trainer_iteration(const ds_trainer* trainer);
DS_API size_t ds_trainer_model_count(const ds_trainer* trainer);
/* Copy of model `index`. */
DS_API ds_status ds_trainer_model(const ds_trainer* trainer, size_t index, ds_cloud** out);
DS_API void ds_trainer_free(ds_trainer* trainer);

/* Return nonzero to stop the run after the current step. */
typedef int (*ds_progress_fn)(const ds_step_info* info, void* user);

/* Full run into `run_dir` (see the README for its layout). With `resume`
 * set, continues from the latest checkpoint. `completed` (optional) is set to
 * 1 when all iterations ran and final outputs were written. */
DS_API ds_status ds_train(const ds_config* config, const char* data_dir, const char* run_dir,
                          int resume, ds_progress_fn progress, void* user, int* completed);

/* ---- Evaluation --------------------------------------------------------- */

typedef struct ds_eval_summary {
  size_t views;
  double psnr_mean;
  double psnr_std;
  double ssim_mean;
  double ssim_std;
} ds_eval_summary;

/* Scores `model` against the dataset's true scene on its held-out cameras
 * and writes the report as one JSON line to `report_path` (optional). */
DS_API ds_status ds_evaluate(const ds_cloud* model, const char* data_dir, const char* report_path,
                             ds_eval_summary* out);

typedef struct ds_ab_summary {
  size_t pairs; /* (run, view) pairs compared */
  double psnr_delta_mean;
  double ssim_delta_mean;
  int psnr_wins;
  int psnr_losses;
  int ssim_wins;
  int ssim_losses;
  double psnr_p_value;
  double ssim_p_value;
} ds_ab_summary;

/* Compares the eval.jsonl reports of paired run directories (a[i] against
 * b[i]). Camera sets must match: a mismatch is DS_ERR_INVALID_ARGUMENT. */
DS_API ds_status ds_ab_compare(const char* const* runs_a, const char* const* runs_b, size_t count,
                               const char* report_path, ds_ab_summary* out);

/* Grayscale min-max-normalized uncertainty of checkpoint `iteration` seen
 * from training view `view`. */
DS_API ds_status ds_uncertainty_viz(const char* run_dir, int iteration, int view,
                                    const char* out_png);

#ifdef __cplusplus
}
#endif

#endif /* DUALSPLAT_DUALSPLAT_H_ */
