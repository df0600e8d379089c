// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

// Tile-based front-to-back alpha-blending rasterizer with an analytic adjoint.
//
// Per pixel x and depth-sorted contributor i:
//   alpha_i(x) = min(alpha_max, sigmoid(opacity_i) * G_i(x))   if the pixel lies
//                inside the footprint_sigma ellipse of G_i, else 0
//   C(x) = sum_i color_i alpha_i T_i + T_final * background,
//   T_i  = prod_{j<i} (1 - alpha_j).
// Blending stops once T drops below transmittance_min. Both the tiled path and
// any per-pixel reference loop see the same alpha_i(x); tiling is only a
// scheduling detail.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dualsplat/core.hpp"
#include "dualsplat/image.hpp"

namespace dualsplat {

struct RenderSettings {
  double alpha_max = 0.99;
  double transmittance_min = 1e-4;
  // Truncation radius in standard deviations; <= 0 disables truncation and
  // footprint culling entirely (every pixel sees every Gaussian).
  double footprint_sigma = 3.0;
  double dilation = kCovarianceDilation;
  int tile_size = 16;
};

struct Contribution {
  std::uint32_t gaussian = 0;
  double alpha = 0.0;
  double transmittance = 0.0;  // T before this contribution
};

// Per-Gaussian preprocessing result, kept for the backward replay.
struct ProjectedGaussian {
  bool visible = false;
  Vec2 mean_2d = Vec2::Zero();
  Mat2 cov_2d = Mat2::Identity();
  Mat2 conic = Mat2::Identity();
  double depth = 0.0;
  double opacity = 0.0;
  std::array<int, 4> bbox{0, 0, 0, 0};  // x0, y0, x1, y1 (half-open)
};

struct RenderOutput {
  ImageBuffer image;
  std::vector<double> alpha;  // accumulated opacity per pixel
  // CSR contribution record: pixel p owns records[offsets[p], offsets[p+1]).
  std::vector<std::size_t> record_offsets;
  std::vector<Contribution> records;

  std::vector<ProjectedGaussian> projected;
  std::vector<std::uint32_t> depth_order;  // visible Gaussians, front to back
  // Tile t blends tile_gaussians[tile_offsets[t], tile_offsets[t+1]) in depth order.
  std::vector<std::size_t> tile_offsets;
  std::vector<std::uint32_t> tile_gaussians;
  int tiles_x = 0;
  int tiles_y = 0;
  Camera camera;
  std::array<double, 3> background{0, 0, 0};
  RenderSettings settings;

  std::size_t pixel_count() const { return alpha.size(); }
  std::span<const Contribution> contributions(std::size_t pixel) const {
    return {records.data() + record_offsets[pixel],
            record_offsets[pixel + 1] - record_offsets[pixel]};
  }
};

struct ParamGradients {
  std::vector<Vec3> positions;
  std::vector<Vec3> log_scales;
  std::vector<Vec4> rotations;
  std::vector<Vec3> colors_dc;
  std::vector<double> opacity_logits;
  // dL/d(projected mean) in pixels, used for densification statistics.
  std::vector<Vec2> mean_2d;

  void reset(std::size_t n);
  std::size_t size() const { return positions.size(); }
  ParamGradients& operator+=(const ParamGradients& other);
  bool all_finite() const;
};

RenderOutput render(const GaussianCloud& cloud, const Camera& cam, const Vec3& background,
                    const RenderSettings& settings = {});

RenderOutput render_at_ratio(const GaussianCloud& cloud, const Camera& cam,
                             const Vec3& background, double ratio,
                             const RenderSettings& settings = {});

// Adjoint of render given dL/d(image). `output` must come from render() on the
// same cloud; the camera, background and settings are taken from it.
ParamGradients render_backward(const GaussianCloud& cloud, const RenderOutput& output,
                               const ImageBuffer& grad_image);
// Same, asserting that cam and background match the forward call.
ParamGradients render_backward(const GaussianCloud& cloud, const Camera& cam,
                               const Vec3& background, const RenderOutput& output,
                               const ImageBuffer& grad_image);

// Gradient w.r.t. the per-point color array only, skipping the geometric
// chain. Used when a render carries a non-color payload in colors_dc.
std::vector<Vec3> render_backward_colors(const RenderOutput& output, const ImageBuffer& grad_image,
                                         std::size_t point_count);

}  // namespace dualsplat
