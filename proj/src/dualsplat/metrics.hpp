// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "dualsplat/core.hpp"
#include "dualsplat/image.hpp"

namespace dualsplat {

inline constexpr double kPsnrCap = 99.0;

// 10 log10(1 / MSE), capped at 99 dB.
double psnr(const ImageBuffer& gt, const ImageBuffer& pred);

struct EvalReport {
  std::vector<Camera> cameras;
  std::vector<double> psnr;
  std::vector<double> ssim;
  double psnr_mean = 0.0;
  double psnr_std = 0.0;
  double ssim_mean = 0.0;
  double ssim_std = 0.0;
  std::string config_fingerprint;
  std::string dataset_fingerprint;

  bool operator==(const EvalReport&) const = default;
};

// Renders both clouds on white per camera (clamped to [0, 1]) and scores the
// model render against the truth render.
EvalReport evaluate(const GaussianCloud& model, const GaussianCloud& truth_scene,
                    std::span<const Camera> cameras);

// Same, against precomputed truth images.
EvalReport evaluate_against(const GaussianCloud& model, std::span<const Camera> cameras,
                            std::span<const ImageBuffer> truth_images);

struct AbReport {
  std::vector<double> psnr_delta;  // a - b, per (seed, view)
  std::vector<double> ssim_delta;
  double psnr_delta_mean = 0.0;
  double ssim_delta_mean = 0.0;
  int ssim_wins = 0;
  int ssim_losses = 0;
  int psnr_wins = 0;
  int psnr_losses = 0;
  // One-sided sign-test p-values for "a better than b"; ties are dropped.
  double ssim_p_value = 1.0;
  double psnr_p_value = 1.0;
};

// P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
double sign_test_p_value(int wins, int losses);

// Pairs reports by index (one per seed); every pair must share its cameras.
AbReport ab_report(std::span<const EvalReport> a, std::span<const EvalReport> b);
AbReport ab_report(const EvalReport& a, const EvalReport& b);

double mean_of(std::span<const double> v);
double stddev_of(std::span<const double> v);

// FNV-1a 64-bit, rendered as 16 hex digits.
std::string fingerprint(const std::string& text);

}  // namespace dualsplat
