// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualsplat/loss.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <mutex>

#include "dualsplat/log.hpp"

namespace dualsplat {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

std::array<double, kSsimWindow> gaussian_window() {
  std::array<double, kSsimWindow> w{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

using Plane = std::vector<double>;

// Separable "same" correlation with zero padding. The kernel is symmetric, so
// this operator is also its own adjoint.
Plane blur(const Plane& src, int width, int height) {
  static const auto w = gaussian_window();
  constexpr int r = kSsimWindow / 2;
  Plane tmp(src.size(), 0.0);
  Plane out(src.size(), 0.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) {
        const int xx = x + k;
        if (xx >= 0 && xx < width) acc += w[k + r] * src[static_cast<std::size_t>(y) * width + xx];
      }
      tmp[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) {
        const int yy = y + k;
        if (yy >= 0 && yy < height) acc += w[k + r] * tmp[static_cast<std::size_t>(yy) * width + x];
      }
      out[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  return out;
}

Plane channel(const ImageBuffer& img, int c) {
  Plane p(img.pixel_count());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = img.data[i * img.channels + c];
  return p;
}

std::mutex g_plugin_mutex;
PerceptualLoss g_plugin;
std::atomic<bool> g_warned_no_plugin{false};

// lambda_l * sum_k perceptual(gt, pred_k), accumulating gradients into grads.
double perceptual_term(const ImageBuffer& gt, const std::vector<const ImageBuffer*>& preds,
                       double lambda_l, const std::vector<ImageBuffer*>& grads) {
  if (lambda_l == 0.0) return 0.0;
  PerceptualLoss plugin;
  {
    std::lock_guard lock(g_plugin_mutex);
    plugin = g_plugin;
  }
  if (!plugin) {
    if (!g_warned_no_plugin.exchange(true))
      log_warning("perceptual loss weight is nonzero but no plugin is registered; term is inactive");
    return 0.0;
  }
  double total = 0.0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    auto [value, grad] = plugin(gt, *preds[k]);
    require_same_shape(grad, *preds[k], "perceptual loss plugin gradient");
    total += value;
    for (std::size_t i = 0; i < grad.size(); ++i) grads[k]->data[i] += lambda_l * grad.data[i];
  }
  return total;
}

}  // namespace

UncertaintyMap uncertainty_map(const ImageBuffer& img1, const ImageBuffer& img2) {
  require_same_shape(img1, img2, "uncertainty_map");
  UncertaintyMap u(img1.width, img1.height, img1.channels);
  for (std::size_t i = 0; i < u.size(); ++i) u.data[i] = std::abs(img1.data[i] - img2.data[i]);
  return u;
}

UncertaintyL1Result uncertainty_l1(const ImageBuffer& gt, const ImageBuffer& pred,
                                   const UncertaintyMap& u, double lambda) {
  require_same_shape(gt, pred, "uncertainty_l1");
  require_same_shape(gt, u, "uncertainty_l1");
  require(lambda >= 0.0, "uncertainty_l1: lambda must be >= 0");
  UncertaintyL1Result r;
  r.grad_pred = ImageBuffer(gt.width, gt.height, gt.channels);
  r.grad_u = ImageBuffer(gt.width, gt.height, gt.channels);
  const std::size_t count = gt.size();
  if (count == 0) return r;
  const double inv = 1.0 / static_cast<double>(count);
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double diff = pred.data[i] - gt.data[i];
    const double weight = std::exp(-lambda * u.data[i]);
    const double residual = std::abs(diff) * weight;
    sum += residual + lambda * u.data[i];
    r.grad_pred.data[i] = sign(diff) * weight * inv;
    r.grad_u.data[i] = lambda * (1.0 - residual) * inv;
  }
  r.loss = sum * inv;
  return r;
}

SsimResult ssim(const ImageBuffer& a, const ImageBuffer& b, bool with_gradient) {
  require_same_shape(a, b, "ssim");
  require(a.width >= kSsimWindow && a.height >= kSsimWindow,
          "ssim: image is smaller than the 11x11 window");
  const int w = a.width;
  const int h = a.height;
  const std::size_t n = a.pixel_count();
  SsimResult r;
  if (with_gradient) r.grad_b = ImageBuffer(w, h, a.channels);
  const double inv_count = 1.0 / static_cast<double>(n * a.channels);

  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    const Plane pa = channel(a, c);
    const Plane pb = channel(b, c);
    Plane aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
      aa[i] = pa[i] * pa[i];
      bb[i] = pb[i] * pb[i];
      ab[i] = pa[i] * pb[i];
    }
    const Plane mu_a = blur(pa, w, h);
    const Plane mu_b = blur(pb, w, h);
    const Plane e_aa = blur(aa, w, h);
    const Plane e_bb = blur(bb, w, h);
    const Plane e_ab = blur(ab, w, h);

    Plane d_mu_b, d_e_bb, d_e_ab;
    if (with_gradient) {
      d_mu_b.resize(n);
      d_e_bb.resize(n);
      d_e_ab.resize(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double var_a = e_aa[i] - ma * ma;
      const double var_b = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      const double a1 = 2.0 * ma * mb + kSsimC1;
      const double a2 = 2.0 * cov + kSsimC2;
      const double b1 = ma * ma + mb * mb + kSsimC1;
      const double b2 = var_a + var_b + kSsimC2;
      const double s = a1 * a2 / (b1 * b2);
      total += s;
      if (!with_gradient) continue;
      const double ds_da1 = a2 / (b1 * b2);
      const double ds_da2 = a1 / (b1 * b2);
      const double ds_db1 = -s / b1;
      const double ds_db2 = -s / b2;
      d_mu_b[i] = (ds_da1 * 2.0 * ma + ds_da2 * (-2.0 * ma) + ds_db1 * 2.0 * mb +
                   ds_db2 * (-2.0 * mb)) *
                  inv_count;
      d_e_ab[i] = 2.0 * ds_da2 * inv_count;
      d_e_bb[i] = ds_db2 * inv_count;
    }
    if (with_gradient) {
      const Plane g_mu = blur(d_mu_b, w, h);
      const Plane g_bb = blur(d_e_bb, w, h);
      const Plane g_ab = blur(d_e_ab, w, h);
      for (std::size_t i = 0; i < n; ++i)
        r.grad_b.data[i * a.channels + c] = g_mu[i] + 2.0 * pb[i] * g_bb[i] + pa[i] * g_ab[i];
    }
  }
  r.value = total * inv_count;
  return r;
}

double d_ssim(const ImageBuffer& gt, const ImageBuffer& pred1, const ImageBuffer& pred2) {
  return (1.0 - ssim(gt, pred1, false).value) + (1.0 - ssim(gt, pred2, false).value);
}

void register_perceptual_loss(PerceptualLoss plugin) {
  std::lock_guard lock(g_plugin_mutex);
  g_plugin = std::move(plugin);
}

bool perceptual_loss_registered() {
  std::lock_guard lock(g_plugin_mutex);
  return static_cast<bool>(g_plugin);
}

TotalLossResult total_loss(const ImageBuffer& gt, const ImageBuffer& pred1,
                           const ImageBuffer& pred2, const LossWeights& w) {
  require_same_shape(gt, pred1, "total_loss");
  require_same_shape(gt, pred2, "total_loss");
  require(w.lambda >= 0.0 && w.lambda_s >= 0.0 && w.lambda_l >= 0.0,
          "total_loss: weights must be >= 0");
  TotalLossResult r;
  r.uncertainty = uncertainty_map(pred1, pred2);
  const UncertaintyL1Result l1 = uncertainty_l1(gt, pred1, r.uncertainty, w.lambda);
  const UncertaintyL1Result l2 = uncertainty_l1(gt, pred2, r.uncertainty, w.lambda);
  const SsimResult s1 = ssim(gt, pred1);
  const SsimResult s2 = ssim(gt, pred2);

  const double pixel_weight = 1.0 - w.lambda_s;
  r.grad_pred1 = ImageBuffer(gt.width, gt.height, gt.channels);
  r.grad_pred2 = ImageBuffer(gt.width, gt.height, gt.channels);
  const double inv = gt.size() ? 1.0 / static_cast<double>(gt.size()) : 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    // Both L1^u terms depend on U; U depends on both predictions.
    double g_u = l1.grad_u.data[i] + l2.grad_u.data[i];
    if (w.detach_uncertainty_weight) g_u = 2.0 * w.lambda * inv;
    const double du = sign(pred1.data[i] - pred2.data[i]);
    r.grad_pred1.data[i] = pixel_weight * (l1.grad_pred.data[i] + g_u * du) -
                           w.lambda_s * s1.grad_b.data[i];
    r.grad_pred2.data[i] = pixel_weight * (l2.grad_pred.data[i] - g_u * du) -
                           w.lambda_s * s2.grad_b.data[i];
  }

  LossBreakdown& b = r.breakdown;
  b.l1_u_model1 = l1.loss;
  b.l1_u_model2 = l2.loss;
  b.d_ssim = (1.0 - s1.value) + (1.0 - s2.value);
  b.lpips = perceptual_term(gt, {&pred1, &pred2}, w.lambda_l, {&r.grad_pred1, &r.grad_pred2});
  b.total = pixel_weight * (b.l1_u_model1 + b.l1_u_model2) + w.lambda_s * b.d_ssim +
            w.lambda_l * b.lpips;
  return r;
}

SingleLossResult single_model_loss(const ImageBuffer& gt, const ImageBuffer& pred,
                                   const UncertaintyMap& u, const LossWeights& w) {
  require_same_shape(gt, pred, "single_model_loss");
  const UncertaintyL1Result l1 = uncertainty_l1(gt, pred, u, w.lambda);
  const SsimResult s = ssim(gt, pred);
  SingleLossResult r;
  const double pixel_weight = 1.0 - w.lambda_s;
  r.grad_pred = ImageBuffer(gt.width, gt.height, gt.channels);
  r.grad_u = ImageBuffer(gt.width, gt.height, gt.channels);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    r.grad_pred.data[i] = pixel_weight * l1.grad_pred.data[i] - w.lambda_s * s.grad_b.data[i];
    r.grad_u.data[i] = pixel_weight * l1.grad_u.data[i];
  }
  LossBreakdown& b = r.breakdown;
  b.l1_u_model1 = l1.loss;
  b.d_ssim = 1.0 - s.value;
  b.lpips = perceptual_term(gt, {&pred}, w.lambda_l, {&r.grad_pred});
  b.total = pixel_weight * b.l1_u_model1 + w.lambda_s * b.d_ssim + w.lambda_l * b.lpips;
  return r;
}

EnsembleLossResult ensemble_loss(const ImageBuffer& gt, const std::vector<ImageBuffer>& preds,
                                 const LossWeights& w) {
  require(preds.size() >= 2, "ensemble_loss: need at least two predictions");
  for (const auto& p : preds) require_same_shape(gt, p, "ensemble_loss");
  const std::size_t k = preds.size();
  const std::size_t count = gt.size();
  EnsembleLossResult r;
  r.uncertainty = UncertaintyMap(gt.width, gt.height, gt.channels);
  std::vector<double> mean(count, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    for (const auto& p : preds) mean[i] += p.data[i];
    mean[i] /= static_cast<double>(k);
    double var = 0.0;
    for (const auto& p : preds) var += (p.data[i] - mean[i]) * (p.data[i] - mean[i]);
    r.uncertainty.data[i] = std::sqrt(var / static_cast<double>(k));
  }

  const double pixel_weight = 1.0 - w.lambda_s;
  std::vector<double> g_u(count, 0.0);
  r.grads.assign(k, ImageBuffer(gt.width, gt.height, gt.channels));
  for (std::size_t m = 0; m < k; ++m) {
    const UncertaintyL1Result l1 = uncertainty_l1(gt, preds[m], r.uncertainty, w.lambda);
    const SsimResult s = ssim(gt, preds[m]);
    r.l1_u.push_back(l1.loss);
    r.d_ssim += 1.0 - s.value;
    for (std::size_t i = 0; i < count; ++i) {
      r.grads[m].data[i] = pixel_weight * l1.grad_pred.data[i] - w.lambda_s * s.grad_b.data[i];
      g_u[i] += w.detach_uncertainty_weight ? w.lambda / static_cast<double>(count)
                                            : l1.grad_u.data[i];
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    const double u = r.uncertainty.data[i];
    if (!(u > 0.0)) continue;
    for (std::size_t m = 0; m < k; ++m)
      r.grads[m].data[i] +=
          pixel_weight * g_u[i] * (preds[m].data[i] - mean[i]) / (static_cast<double>(k) * u);
  }
  std::vector<const ImageBuffer*> pp;
  std::vector<ImageBuffer*> gp;
  for (std::size_t m = 0; m < k; ++m) {
    pp.push_back(&preds[m]);
    gp.push_back(&r.grads[m]);
  }
  r.lpips = perceptual_term(gt, pp, w.lambda_l, gp);
  double l1_sum = 0.0;
  for (double v : r.l1_u) l1_sum += v;
  r.total = pixel_weight * l1_sum + w.lambda_s * r.d_ssim + w.lambda_l * r.lpips;
  return r;
}

ImageBuffer normalize_uncertainty_for_viz(const UncertaintyMap& u) {
  ImageBuffer out(u.width, u.height, 1);
  for (std::size_t p = 0; p < u.pixel_count(); ++p) {
    double acc = 0.0;
    for (int c = 0; c < u.channels; ++c) acc += u.data[p * u.channels + c];
    out.data[p] = acc / u.channels;
  }
  if (out.data.empty()) return out;
  const auto [lo, hi] = std::minmax_element(out.data.begin(), out.data.end());
  const double min = *lo, max = *hi;
  if (!(max > min)) {
    std::fill(out.data.begin(), out.data.end(), 0.0);
    return out;
  }
  for (double& v : out.data) v = (v - min) / (max - min);
  return out;
}

}  // namespace dualsplat
