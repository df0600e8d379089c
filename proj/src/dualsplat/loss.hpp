// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

// Training objectives. Pixel terms are reduced by the mean over all
// pixels and channels; subgradients use sign(0) = 0.

#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "dualsplat/image.hpp"

namespace dualsplat {

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

// Per-pixel, per-channel |img1 - img2|. Same shape as the renders.
using UncertaintyMap = ImageBuffer;

UncertaintyMap uncertainty_map(const ImageBuffer& img1, const ImageBuffer& img2);

struct UncertaintyL1Result {
  double loss = 0.0;
  ImageBuffer grad_pred;
  ImageBuffer grad_u;
};

// mean(|gt - pred| * exp(-lambda u) + lambda u)
UncertaintyL1Result uncertainty_l1(const ImageBuffer& gt, const ImageBuffer& pred,
                                   const UncertaintyMap& u, double lambda);

struct SsimResult {
  double value = 0.0;
  ImageBuffer grad_b;  // d mean-SSIM / d b
};

// Mean SSIM with an 11x11 Gaussian window (sigma 1.5), zero padding, averaged
// over channels. The gradient is computed only when requested.
SsimResult ssim(const ImageBuffer& a, const ImageBuffer& b, bool with_gradient = true);

// (1 - ssim(gt, pred1)) + (1 - ssim(gt, pred2))
double d_ssim(const ImageBuffer& gt, const ImageBuffer& pred1, const ImageBuffer& pred2);

// External perceptual term: (gt, pred) -> (loss, dloss/dpred).
using PerceptualLoss =
    std::function<std::pair<double, ImageBuffer>(const ImageBuffer& gt, const ImageBuffer& pred)>;

// Process-wide plugin slot. An empty function unregisters.
void register_perceptual_loss(PerceptualLoss plugin);
bool perceptual_loss_registered();

struct LossWeights {
  double lambda = 5.0;     // uncertainty amplification
  double lambda_s = 0.2;   // D-SSIM weight
  double lambda_l = 0.5;   // perceptual weight (no-op without a plugin)
  // Treat exp(-lambda U) as a constant for the residual term.
  bool detach_uncertainty_weight = false;
};

struct LossBreakdown {
  double l1_u_model1 = 0.0;
  double l1_u_model2 = 0.0;
  double d_ssim = 0.0;
  double lpips = 0.0;
  double total = 0.0;
};

struct TotalLossResult {
  LossBreakdown breakdown;
  UncertaintyMap uncertainty;
  ImageBuffer grad_pred1;
  ImageBuffer grad_pred2;
};

// Dual-model objective with U computed from the two predictions and the
// gradient flowing through U into both.
TotalLossResult total_loss(const ImageBuffer& gt, const ImageBuffer& pred1,
                           const ImageBuffer& pred2, const LossWeights& w);

struct SingleLossResult {
  LossBreakdown breakdown;  // l1_u_model2 stays 0
  ImageBuffer grad_pred;
  ImageBuffer grad_u;
};

// Single-model objective with an externally supplied uncertainty map
// (zero map gives the standard (1-ls) L1 + ls D-SSIM baseline).
SingleLossResult single_model_loss(const ImageBuffer& gt, const ImageBuffer& pred,
                                   const UncertaintyMap& u, const LossWeights& w);

struct EnsembleLossResult {
  double total = 0.0;
  std::vector<double> l1_u;
  double d_ssim = 0.0;
  double lpips = 0.0;
  UncertaintyMap uncertainty;  // per-entry population standard deviation
  std::vector<ImageBuffer> grads;
};

EnsembleLossResult ensemble_loss(const ImageBuffer& gt, const std::vector<ImageBuffer>& preds,
                                 const LossWeights& w);

// Channel mean collapsed to one channel, then min-max normalized.
// A constant map yields all zeros.
ImageBuffer normalize_uncertainty_for_viz(const UncertaintyMap& u);

}  // namespace dualsplat
