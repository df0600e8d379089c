// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualsplat/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "dualsplat/loss.hpp"
#include "dualsplat/render.hpp"

namespace dualsplat {

double psnr(const ImageBuffer& gt, const ImageBuffer& pred) {
  require_same_shape(gt, pred, "psnr");
  require(gt.size() > 0, "psnr: empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double d = gt.data[i] - pred.data[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(gt.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

namespace {
void finalize(EvalReport& r) {
  r.psnr_mean = mean_of(r.psnr);
  r.psnr_std = stddev_of(r.psnr);
  r.ssim_mean = mean_of(r.ssim);
  r.ssim_std = stddev_of(r.ssim);
}
}  // namespace

EvalReport evaluate_against(const GaussianCloud& model, std::span<const Camera> cameras,
                            std::span<const ImageBuffer> truth_images) {
  require(!cameras.empty(), "evaluate: camera list is empty");
  require(cameras.size() == truth_images.size(), "evaluate: one truth image per camera required");
  EvalReport r;
  r.cameras.assign(cameras.begin(), cameras.end());
  for (std::size_t v = 0; v < cameras.size(); ++v) {
    const ImageBuffer pred = clamp01(render(model, cameras[v], Vec3::Ones()).image);
    const ImageBuffer truth = clamp01(truth_images[v]);
    r.psnr.push_back(psnr(truth, pred));
    r.ssim.push_back(ssim(truth, pred, false).value);
  }
  finalize(r);
  return r;
}

EvalReport evaluate(const GaussianCloud& model, const GaussianCloud& truth_scene,
                    std::span<const Camera> cameras) {
  require(!cameras.empty(), "evaluate: camera list is empty");
  std::vector<ImageBuffer> truth;
  truth.reserve(cameras.size());
  for (const auto& cam : cameras) truth.push_back(render(truth_scene, cam, Vec3::Ones()).image);
  return evaluate_against(model, cameras, truth);
}

double sign_test_p_value(int wins, int losses) {
  require(wins >= 0 && losses >= 0, "sign test: negative counts");
  const int n = wins + losses;
  if (n == 0) return 1.0;
  // Sum binomial terms in log space; exact enough for n in the thousands.
  long double p = 0.0L;
  for (int i = wins; i <= n; ++i) {
    const long double log_term = std::lgamma(static_cast<long double>(n) + 1) -
                                 std::lgamma(static_cast<long double>(i) + 1) -
                                 std::lgamma(static_cast<long double>(n - i) + 1) -
                                 n * std::log(2.0L);
    p += std::exp(log_term);
  }
  return static_cast<double>(std::min(1.0L, p));
}

AbReport ab_report(std::span<const EvalReport> a, std::span<const EvalReport> b) {
  require(a.size() == b.size() && !a.empty(), "ab_report: need one report per seed on each side");
  AbReport r;
  for (std::size_t s = 0; s < a.size(); ++s) {
    require(a[s].cameras == b[s].cameras && a[s].psnr.size() == b[s].psnr.size() &&
                a[s].ssim.size() == b[s].ssim.size(),
            "ab_report: reports were computed on different cameras");
    for (std::size_t v = 0; v < a[s].psnr.size(); ++v) {
      const double dp = a[s].psnr[v] - b[s].psnr[v];
      const double ds = a[s].ssim[v] - b[s].ssim[v];
      r.psnr_delta.push_back(dp);
      r.ssim_delta.push_back(ds);
      r.psnr_wins += dp > 0;
      r.psnr_losses += dp < 0;
      r.ssim_wins += ds > 0;
      r.ssim_losses += ds < 0;
    }
  }
  r.psnr_delta_mean = mean_of(r.psnr_delta);
  r.ssim_delta_mean = mean_of(r.ssim_delta);
  r.psnr_p_value = sign_test_p_value(r.psnr_wins, r.psnr_losses);
  r.ssim_p_value = sign_test_p_value(r.ssim_wins, r.ssim_losses);
  return r;
}

AbReport ab_report(const EvalReport& a, const EvalReport& b) {
  return ab_report(std::span<const EvalReport>(&a, 1), std::span<const EvalReport>(&b, 1));
}

std::string fingerprint(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dualsplat
