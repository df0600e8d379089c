// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

// Uncertainty-aware multi-model optimization.
//
// In the default dual mode two independently initialized clouds are fit to
// the same labels; their per-pixel render difference U down-weights the L1
// residual of both through exp(-lambda U) while +lambda U keeps the two from
// drifting apart.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dualsplat/core.hpp"
#include "dualsplat/data.hpp"
#include "dualsplat/loss.hpp"
#include "dualsplat/render.hpp"
#include "dualsplat/rng.hpp"

namespace dualsplat {

enum class AblationMode { kDual, kSingleBaseline, kLearnableVariance, kEnsemble };

const char* ablation_mode_name(AblationMode mode);
AblationMode parse_ablation_mode(const std::string& name);

struct ResolutionMilestone {
  double fraction = 0.0;
  double ratio = 1.0;
  bool operator==(const ResolutionMilestone&) const = default;
};

struct ElevationMilestone {
  double fraction = 0.0;
  std::vector<int> orbits;  // full active set from this fraction on
  bool operator==(const ElevationMilestone&) const = default;
};

struct TrainConfig {
  int total_iters = 5000;
  double lambda = 5.0;
  double lambda_s = 0.2;
  double lambda_l = 0.5;
  bool detach_uncertainty_weight = false;

  double lr_position_init = 1.6e-4;
  double lr_position_final = 1.6e-6;
  double lr_color = 2.5e-3;
  double lr_opacity = 5e-2;
  double lr_scale = 5e-3;
  double lr_rotation = 1e-3;
  double lr_variance = 1e-2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-15;

  int densify_interval = 100;
  int densify_start = 500;
  int densify_stop = -1;  // -1: half of total_iters
  double densify_grad_threshold = 2e-4;
  double prune_opacity_threshold = 0.005;
  int opacity_reset_interval = 1500;
  double opacity_reset_value = 0.01;
  double split_scale_divisor = 1.6;
  double percent_dense = 0.01;
  int max_points = 200000;
  double scene_extent = 0.0;  // 0: derived from the training cameras

  std::vector<ResolutionMilestone> resolution_milestones{{0.0, 0.25}, {0.2, 0.5}, {0.5, 1.0}};
  std::vector<ElevationMilestone> elevation_milestones{{0.0, {0}}, {0.5, {0, 1}}, {0.8, {0, 1, 2}}};

  std::uint64_t seed1 = 1;
  std::uint64_t seed2 = 2;
  std::uint64_t sample_seed = 0;  // view and background sampling
  int init_points = 4096;
  double init_radius = 1.0;
  double init_opacity = 0.1;
  double init_color = 0.5;
  bool random_background = true;
  AblationMode ablation_mode = AblationMode::kDual;
  int ensemble_k = 3;
  double init_log_variance = -4.0;
  int checkpoint_interval = 500;

  int effective_densify_stop() const {
    return densify_stop >= 0 ? densify_stop : total_iters / 2;
  }
  int model_count() const;
  // Throws kConfig on violated invariants.
  void validate() const;
};

// Adam state for one cloud, shaped like the cloud itself.
struct AdamMoments {
  GaussianCloud m;
  GaussianCloud v;
  std::vector<double> variance_m;
  std::vector<double> variance_v;

  void reset(std::size_t n, bool with_variance);
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-15;
};

// One bias-corrected Adam update at step `step` (>= 1).
void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
               std::span<double> v, double lr, const AdamHyper& hyper, std::int64_t step);

struct ModelState {
  GaussianCloud cloud;
  AdamMoments moments;
  std::vector<double> log_variance;  // learnable-variance mode only
  std::vector<double> grad_accum;    // summed screen-space gradient norms
  std::vector<int> grad_count;
  Rng densify_rng;

  std::size_t size() const { return cloud.size(); }
  bool operator==(const ModelState& o) const {
    return cloud == o.cloud && moments.m == o.moments.m && moments.v == o.moments.v &&
           log_variance == o.log_variance && grad_accum == o.grad_accum &&
           grad_count == o.grad_count && densify_rng == o.densify_rng;
  }
};

struct TrainerState {
  std::vector<ModelState> models;
  int iteration = 0;    // number of completed steps
  std::int64_t adam_step = 0;
  Rng view_rng;
  Rng background_rng;
  double scene_extent = 1.0;

  bool operator==(const TrainerState&) const = default;
};

// Uniform points in a ball, isotropic scales from the mean squared distance
// to the 3 nearest neighbours, identity rotations, gray colors.
GaussianCloud random_init_cloud(int points, double radius, double opacity, double color,
                                std::uint64_t seed);

TrainerState init_models(const TrainConfig& config);

// 1.1 x the largest camera distance from the camera centroid.
double scene_extent_from_cameras(std::span<const Camera> cameras);

double resolution_schedule(int iter, int total, std::span<const ResolutionMilestone> milestones);
std::vector<int> elevation_schedule(int iter, int total,
                                    std::span<const ElevationMilestone> milestones);

// The scheduled ratio, raised where needed so the scaled render still covers
// the SSIM window. Full-resolution images smaller than the window are left
// for the loss to reject.
double training_ratio(double scheduled, int width, int height);

Vec3 sample_background(Rng& rng, bool random_background);

double position_learning_rate(const TrainConfig& config, int iter);

struct StepResult {
  LossBreakdown loss;
  UncertaintyMap uncertainty;
  std::size_t view = 0;
  Vec3 background = Vec3::Ones();
  double ratio = 1.0;
  std::vector<int> active_orbits;
  bool densified = false;
};

StepResult train_step(TrainerState& state, const PseudoDataset& dataset, const TrainConfig& config);

// Clone / split / prune one model using its accumulated statistics.
void densify_and_prune(ModelState& model, const TrainConfig& config, double scene_extent);

// Resets opacities to min(current, opacity_reset_value) and clears their moments.
void reset_opacity(ModelState& model, const TrainConfig& config);

// Index of the model with the lowest mean L1 over all training views rendered
// at full resolution on white; ties go to the lower index.
std::size_t select_output_model(const TrainerState& state, const PseudoDataset& dataset);

}  // namespace dualsplat
