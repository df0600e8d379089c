// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualsplat/render.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "dualsplat/parallel.hpp"

namespace dualsplat {

namespace {

struct Grad2D {
  Vec2 mean = Vec2::Zero();
  double conic_a = 0.0;  // d/d conic(0,0)
  double conic_b = 0.0;  // d/d conic(0,1), counting both off-diagonal entries
  double conic_c = 0.0;  // d/d conic(1,1)
  double opacity = 0.0;  // d/d activated opacity
  Vec3 color = Vec3::Zero();

  Grad2D& operator+=(const Grad2D& o) {
    mean += o.mean;
    conic_a += o.conic_a;
    conic_b += o.conic_b;
    conic_c += o.conic_c;
    opacity += o.opacity;
    color += o.color;
    return *this;
  }
};

ProjectedGaussian preprocess(const GaussianCloud& cloud, std::size_t i, const CameraMatrices& cm,
                             const Camera& cam, const RenderSettings& s) {
  ProjectedGaussian g;
  const Mat3 cov = covariance_3d(cloud.log_scales[i], cloud.rotations[i]);
  const auto proj = project_gaussian(cloud.positions[i], cov, cm, s.dilation);
  if (!proj) return g;
  g.mean_2d = proj->mean_2d;
  g.cov_2d = proj->cov_2d;
  g.depth = proj->depth;
  const double det = g.cov_2d.determinant();
  if (!(det > 0.0)) return g;
  g.conic << g.cov_2d(1, 1) / det, -g.cov_2d(0, 1) / det, -g.cov_2d(1, 0) / det,
      g.cov_2d(0, 0) / det;
  g.opacity = sigmoid(cloud.opacity_logits[i]);

  if (s.footprint_sigma > 0.0) {
    // Largest eigenvalue of the symmetric 2x2 covariance.
    const double mid = 0.5 * (g.cov_2d(0, 0) + g.cov_2d(1, 1));
    const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
    const double r = s.footprint_sigma * std::sqrt(lambda_max);
    // Pixel centers sit at integer + 0.5.
    const int x0 = static_cast<int>(std::ceil(g.mean_2d.x() - r - 0.5));
    const int x1 = static_cast<int>(std::floor(g.mean_2d.x() + r - 0.5)) + 1;
    const int y0 = static_cast<int>(std::ceil(g.mean_2d.y() - r - 0.5));
    const int y1 = static_cast<int>(std::floor(g.mean_2d.y() + r - 0.5)) + 1;
    g.bbox = {std::max(0, x0), std::max(0, y0), std::min(cam.width, x1), std::min(cam.height, y1)};
    if (g.bbox[0] >= g.bbox[2] || g.bbox[1] >= g.bbox[3]) return g;
  } else {
    g.bbox = {0, 0, cam.width, cam.height};
  }
  g.visible = true;
  return g;
}

}  // namespace

void ParamGradients::reset(std::size_t n) {
  positions.assign(n, Vec3::Zero());
  log_scales.assign(n, Vec3::Zero());
  rotations.assign(n, Vec4::Zero());
  colors_dc.assign(n, Vec3::Zero());
  opacity_logits.assign(n, 0.0);
  mean_2d.assign(n, Vec2::Zero());
}

ParamGradients& ParamGradients::operator+=(const ParamGradients& o) {
  require(o.size() == size(), "gradient size mismatch");
  for (std::size_t i = 0; i < size(); ++i) {
    positions[i] += o.positions[i];
    log_scales[i] += o.log_scales[i];
    rotations[i] += o.rotations[i];
    colors_dc[i] += o.colors_dc[i];
    opacity_logits[i] += o.opacity_logits[i];
    mean_2d[i] += o.mean_2d[i];
  }
  return *this;
}

bool ParamGradients::all_finite() const {
  for (std::size_t i = 0; i < size(); ++i) {
    if (!positions[i].allFinite() || !log_scales[i].allFinite() || !rotations[i].allFinite() ||
        !colors_dc[i].allFinite() || !std::isfinite(opacity_logits[i]) || !mean_2d[i].allFinite())
      return false;
  }
  return true;
}

RenderOutput render(const GaussianCloud& cloud, const Camera& cam, const Vec3& background,
                    const RenderSettings& settings) {
  cam.validate();
  require(settings.tile_size >= 1, "tile size must be >= 1");
  const std::size_t n = cloud.size();
  require(cloud.log_scales.size() == n && cloud.rotations.size() == n &&
              cloud.colors_dc.size() == n && cloud.opacity_logits.size() == n,
          "render: cloud arrays have mismatched lengths");

  RenderOutput out;
  out.camera = cam;
  out.background = {background.x(), background.y(), background.z()};
  out.settings = settings;
  out.image = ImageBuffer(cam.width, cam.height, 3);
  out.alpha.assign(out.image.pixel_count(), 0.0);

  const CameraMatrices cm = camera_matrices(cam);
  out.projected.resize(n);
  parallel_for(n, [&](std::size_t i) { out.projected[i] = preprocess(cloud, i, cm, cam, settings); });

  for (std::size_t i = 0; i < n; ++i)
    if (out.projected[i].visible) out.depth_order.push_back(static_cast<std::uint32_t>(i));
  std::stable_sort(out.depth_order.begin(), out.depth_order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     return out.projected[a].depth < out.projected[b].depth;
                   });

  const int ts = settings.tile_size;
  out.tiles_x = (cam.width + ts - 1) / ts;
  out.tiles_y = (cam.height + ts - 1) / ts;
  const std::size_t tile_count = static_cast<std::size_t>(out.tiles_x) * out.tiles_y;
  {
    std::vector<std::size_t> counts(tile_count + 1, 0);
    for (std::uint32_t gi : out.depth_order) {
      const auto& b = out.projected[gi].bbox;
      for (int ty = b[1] / ts; ty <= (b[3] - 1) / ts; ++ty)
        for (int tx = b[0] / ts; tx <= (b[2] - 1) / ts; ++tx) ++counts[ty * out.tiles_x + tx + 1];
    }
    std::partial_sum(counts.begin(), counts.end(), counts.begin());
    out.tile_offsets = counts;
    out.tile_gaussians.resize(counts.back());
    std::vector<std::size_t> cursor(counts.begin(), counts.end() - 1);
    for (std::uint32_t gi : out.depth_order) {
      const auto& b = out.projected[gi].bbox;
      for (int ty = b[1] / ts; ty <= (b[3] - 1) / ts; ++ty)
        for (int tx = b[0] / ts; tx <= (b[2] - 1) / ts; ++tx)
          out.tile_gaussians[cursor[ty * out.tiles_x + tx]++] = gi;
    }
  }

  const double sigma2 = settings.footprint_sigma > 0.0
                            ? settings.footprint_sigma * settings.footprint_sigma
                            : std::numeric_limits<double>::infinity();
  std::vector<std::vector<Contribution>> tile_records(tile_count);
  std::vector<std::size_t> pixel_counts(out.image.pixel_count(), 0);

  parallel_for(tile_count, [&](std::size_t t) {
    const int tx = static_cast<int>(t % out.tiles_x);
    const int ty = static_cast<int>(t / out.tiles_x);
    const std::uint32_t* list = out.tile_gaussians.data() + out.tile_offsets[t];
    const std::size_t list_len = out.tile_offsets[t + 1] - out.tile_offsets[t];
    auto& recs = tile_records[t];
    for (int y = ty * ts; y < std::min(cam.height, (ty + 1) * ts); ++y) {
      for (int x = tx * ts; x < std::min(cam.width, (tx + 1) * ts); ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * cam.width + x;
        const Vec2 px(x + 0.5, y + 0.5);
        double T = 1.0;
        Vec3 color = Vec3::Zero();
        std::size_t count = 0;
        for (std::size_t k = 0; k < list_len; ++k) {
          const std::uint32_t gi = list[k];
          const ProjectedGaussian& g = out.projected[gi];
          if (x < g.bbox[0] || x >= g.bbox[2] || y < g.bbox[1] || y >= g.bbox[3]) continue;
          const Vec2 d = px - g.mean_2d;
          const double maha = d.x() * d.x() * g.conic(0, 0) + 2.0 * d.x() * d.y() * g.conic(0, 1) +
                              d.y() * d.y() * g.conic(1, 1);
          if (maha > sigma2) continue;
          const double alpha = std::min(settings.alpha_max, g.opacity * std::exp(-0.5 * maha));
          if (!(alpha > 0.0)) continue;
          recs.push_back({gi, alpha, T});
          ++count;
          color += cloud.colors_dc[gi] * (alpha * T);
          T *= 1.0 - alpha;
          if (T < settings.transmittance_min) break;
        }
        pixel_counts[p] = count;
        out.alpha[p] = 1.0 - T;
        auto dst = out.image.pixel(p);
        for (int c = 0; c < 3; ++c) dst[c] = color[c] + T * background[c];
      }
    }
  });

  // Pixels of a tile are contiguous within that tile's record list, in the
  // same row-major order we visit them here.
  out.record_offsets.assign(out.image.pixel_count() + 1, 0);
  for (std::size_t p = 0; p < pixel_counts.size(); ++p)
    out.record_offsets[p + 1] = out.record_offsets[p] + pixel_counts[p];
  out.records.resize(out.record_offsets.back());
  for (std::size_t t = 0; t < tile_count; ++t) {
    const int tx = static_cast<int>(t % out.tiles_x);
    const int ty = static_cast<int>(t / out.tiles_x);
    std::size_t src = 0;
    for (int y = ty * ts; y < std::min(cam.height, (ty + 1) * ts); ++y) {
      for (int x = tx * ts; x < std::min(cam.width, (tx + 1) * ts); ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * cam.width + x;
        std::copy_n(tile_records[t].begin() + src, pixel_counts[p],
                    out.records.begin() + out.record_offsets[p]);
        src += pixel_counts[p];
      }
    }
  }
  return out;
}

RenderOutput render_at_ratio(const GaussianCloud& cloud, const Camera& cam, const Vec3& background,
                             double ratio, const RenderSettings& settings) {
  require(ratio > 0.0 && ratio <= 1.0, "render ratio must lie in (0, 1]");
  return render(cloud, cam.scaled(ratio), background, settings);
}

namespace {

// Per-pixel blending adjoint accumulated into per-tile slots, then reduced in
// fixed tile order so the result does not depend on the worker count.
std::vector<Grad2D> backward_2d(const GaussianCloud& cloud, const RenderOutput& out,
                                const ImageBuffer& grad_image, bool colors_only) {
  const Camera& cam = out.camera;
  const int ts = out.settings.tile_size;
  const std::size_t tile_count = static_cast<std::size_t>(out.tiles_x) * out.tiles_y;
  const Vec3 bg(out.background[0], out.background[1], out.background[2]);
  const std::size_t n = out.projected.size();

  std::vector<std::vector<Grad2D>> tile_grads(tile_count);
  parallel_for(tile_count, [&](std::size_t t) {
    const std::size_t list_begin = out.tile_offsets[t];
    const std::size_t list_len = out.tile_offsets[t + 1] - list_begin;
    if (list_len == 0) return;
    auto& acc = tile_grads[t];
    acc.assign(list_len, Grad2D{});
    // Records within a pixel are in depth order, i.e. a subsequence of the
    // tile list, so each slot lookup is a forward scan.
    const std::uint32_t* list = out.tile_gaussians.data() + list_begin;
    const int tx = static_cast<int>(t % out.tiles_x);
    const int ty = static_cast<int>(t / out.tiles_x);
    std::vector<std::size_t> slots;
    for (int y = ty * ts; y < std::min(cam.height, (ty + 1) * ts); ++y) {
      for (int x = tx * ts; x < std::min(cam.width, (tx + 1) * ts); ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * cam.width + x;
        const auto recs = out.contributions(p);
        if (recs.empty()) continue;
        const auto gpx = grad_image.pixel(p);
        const Vec3 dl_dc(gpx[0], gpx[1], gpx[2]);
        if (dl_dc.isZero(0.0)) continue;

        slots.resize(recs.size());
        std::size_t cursor = 0;
        for (std::size_t k = 0; k < recs.size(); ++k) {
          while (list[cursor] != recs[k].gaussian) ++cursor;
          slots[k] = cursor++;
        }

        const Vec2 px(x + 0.5, y + 0.5);
        Vec3 behind = bg;  // color composited behind the current contributor
        for (std::size_t k = recs.size(); k-- > 0;) {
          const Contribution& rec = recs[k];
          Grad2D& g = acc[slots[k]];
          g.color += (rec.alpha * rec.transmittance) * dl_dc;
          if (!colors_only) {
            const Vec3& color = cloud.colors_dc[rec.gaussian];
            const double dl_dalpha = rec.transmittance * (color - behind).dot(dl_dc);
            const ProjectedGaussian& pg = out.projected[rec.gaussian];
            const Vec2 d = px - pg.mean_2d;
            const double maha = d.x() * d.x() * pg.conic(0, 0) +
                                2.0 * d.x() * d.y() * pg.conic(0, 1) + d.y() * d.y() * pg.conic(1, 1);
            const double gauss = std::exp(-0.5 * maha);
            if (pg.opacity * gauss < out.settings.alpha_max) {
              g.opacity += gauss * dl_dalpha;
              const double dl_dpower = pg.opacity * gauss * dl_dalpha;
              g.mean += dl_dpower * (pg.conic * d);
              g.conic_a += dl_dpower * (-0.5 * d.x() * d.x());
              g.conic_b += dl_dpower * (-d.x() * d.y());
              g.conic_c += dl_dpower * (-0.5 * d.y() * d.y());
            }
            behind = rec.alpha * color + (1.0 - rec.alpha) * behind;
          }
        }
      }
    }
  });

  std::vector<Grad2D> grads(n);
  for (std::size_t t = 0; t < tile_count; ++t) {
    const std::size_t begin = out.tile_offsets[t];
    for (std::size_t s = 0; s < tile_grads[t].size(); ++s)
      grads[out.tile_gaussians[begin + s]] += tile_grads[t][s];
  }
  return grads;
}

// dL/dq from dL/dR for R = quat_to_rotation(q).
Vec4 rotation_backward(const Vec4& q, const Mat3& g) {
  const double norm = q.norm();
  const Vec4 u = q / norm;
  const double w = u[0], x = u[1], y = u[2], z = u[3];
  Vec4 du;
  du[0] = 2 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1));
  du[1] = 2 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2 * x * g(1, 1) - w * g(1, 2) +
               z * g(2, 0) + w * g(2, 1) - 2 * x * g(2, 2));
  du[2] = 2 * (-2 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) -
               w * g(2, 0) + z * g(2, 1) - 2 * y * g(2, 2));
  du[3] = 2 * (-2 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2 * z * g(1, 1) +
               y * g(1, 2) + x * g(2, 0) + y * g(2, 1));
  return (du - u * u.dot(du)) / norm;
}

}  // namespace

ParamGradients render_backward(const GaussianCloud& cloud, const RenderOutput& output,
                               const ImageBuffer& grad_image) {
  const std::size_t n = cloud.size();
  require(output.projected.size() == n, "render_backward: cloud does not match render output");
  require(grad_image.width == output.image.width && grad_image.height == output.image.height &&
              grad_image.channels == 3,
          "render_backward: gradient image shape does not match render output");

  const std::vector<Grad2D> g2 = backward_2d(cloud, output, grad_image, false);
  const CameraMatrices cm = camera_matrices(output.camera);
  const Mat3 w = cm.rotation();
  const Intrinsics k = cm.intrinsics;

  ParamGradients grads;
  grads.reset(n);
  parallel_for(n, [&](std::size_t i) {
    const ProjectedGaussian& pg = output.projected[i];
    if (!pg.visible) return;
    const Grad2D& g = g2[i];
    grads.colors_dc[i] = g.color;
    grads.opacity_logits[i] = g.opacity * pg.opacity * (1.0 - pg.opacity);
    grads.mean_2d[i] = g.mean;

    // conic = cov^-1  =>  dL/dcov = -conic * G * conic
    Mat2 g_conic;
    g_conic << g.conic_a, 0.5 * g.conic_b, 0.5 * g.conic_b, g.conic_c;
    const Mat2 g_cov2 = -pg.conic * g_conic * pg.conic;

    const Vec3 t = w * cloud.positions[i] + cm.translation();
    const double iz = 1.0 / t.z();
    const double iz2 = iz * iz;
    Eigen::Matrix<double, 2, 3> jac;
    jac << k.fx * iz, 0.0, -k.fx * t.x() * iz2, 0.0, k.fy * iz, -k.fy * t.y() * iz2;
    const Eigen::Matrix<double, 2, 3> tw = jac * w;

    const Vec3 s = cloud.log_scales[i].array().exp();
    const Mat3 rot = quat_to_rotation(cloud.rotations[i]);
    const Mat3 m = rot * s.asDiagonal();
    const Mat3 cov3 = m * m.transpose();

    // cov2 = TW cov3 TW^T
    const Mat3 g_cov3 = tw.transpose() * g_cov2 * tw;
    const Eigen::Matrix<double, 2, 3> g_tw = 2.0 * g_cov2 * tw * cov3;
    const Eigen::Matrix<double, 2, 3> g_jac = g_tw * w.transpose();

    Vec3 g_t = Vec3::Zero();
    // mean_2d = (fx tx / tz + cx, fy ty / tz + cy)
    g_t.x() += g.mean.x() * k.fx * iz;
    g_t.y() += g.mean.y() * k.fy * iz;
    g_t.z() += -g.mean.x() * k.fx * t.x() * iz2 - g.mean.y() * k.fy * t.y() * iz2;
    // Jacobian entries
    g_t.z() += g_jac(0, 0) * (-k.fx * iz2) + g_jac(1, 1) * (-k.fy * iz2);
    g_t.x() += g_jac(0, 2) * (-k.fx * iz2);
    g_t.z() += g_jac(0, 2) * (2.0 * k.fx * t.x() * iz2 * iz);
    g_t.y() += g_jac(1, 2) * (-k.fy * iz2);
    g_t.z() += g_jac(1, 2) * (2.0 * k.fy * t.y() * iz2 * iz);
    grads.positions[i] = w.transpose() * g_t;

    // cov3 = M M^T, M = R S
    const Mat3 g_m = 2.0 * g_cov3 * m;
    const Mat3 g_rot = g_m * s.asDiagonal();
    for (int j = 0; j < 3; ++j) grads.log_scales[i][j] = g_m.col(j).dot(rot.col(j)) * s[j];
    grads.rotations[i] = rotation_backward(cloud.rotations[i], g_rot);
  });
  return grads;
}

ParamGradients render_backward(const GaussianCloud& cloud, const Camera& cam,
                               const Vec3& background, const RenderOutput& output,
                               const ImageBuffer& grad_image) {
  require(cam == output.camera, "render_backward: camera differs from the forward pass");
  require(background.x() == output.background[0] && background.y() == output.background[1] &&
              background.z() == output.background[2],
          "render_backward: background differs from the forward pass");
  return render_backward(cloud, output, grad_image);
}

std::vector<Vec3> render_backward_colors(const RenderOutput& output, const ImageBuffer& grad_image,
                                         std::size_t point_count) {
  require(output.projected.size() == point_count, "render_backward_colors: size mismatch");
  require(grad_image.width == output.image.width && grad_image.height == output.image.height &&
              grad_image.channels == 3,
          "render_backward_colors: gradient image shape mismatch");
  // The color adjoint never reads the cloud's colors.
  GaussianCloud dummy;
  const std::vector<Grad2D> g2 = backward_2d(dummy, output, grad_image, true);
  std::vector<Vec3> out(point_count);
  for (std::size_t i = 0; i < point_count; ++i) out[i] = g2[i].color;
  return out;
}

}  // namespace dualsplat
