// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualsplat/image.hpp"

#include <algorithm>
#include <cmath>

namespace dualsplat {

namespace {
// Overlap weights of destination cells [j*s, (j+1)*s) with source cells [k, k+1).
std::vector<std::vector<std::pair<int, double>>> area_weights(int src, int dst) {
  std::vector<std::vector<std::pair<int, double>>> w(dst);
  const double step = static_cast<double>(src) / dst;
  for (int j = 0; j < dst; ++j) {
    const double lo = j * step;
    const double hi = (j + 1) * step;
    for (int k = static_cast<int>(std::floor(lo)); k < std::min(src, static_cast<int>(std::ceil(hi))); ++k) {
      const double overlap = std::min(hi, k + 1.0) - std::max(lo, static_cast<double>(k));
      if (overlap > 0) w[j].emplace_back(k, overlap / step);
    }
  }
  return w;
}
}  // namespace

ImageBuffer resample_area(const ImageBuffer& src, int width, int height) {
  require(width >= 1 && height >= 1, "resample target must be at least 1x1");
  if (width == src.width && height == src.height) return src;
  const auto wx = area_weights(src.width, width);
  const auto wy = area_weights(src.height, height);
  ImageBuffer out(width, height, src.channels);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (const auto& [sy, fy] : wy[y]) {
        for (const auto& [sx, fx] : wx[x]) {
          for (int c = 0; c < src.channels; ++c) out.at(x, y, c) += fy * fx * src.at(sx, sy, c);
        }
      }
    }
  }
  return out;
}

ImageBuffer composite(const ImageBuffer& rgb, std::span<const double> alpha,
                      const double background[3]) {
  require(rgb.channels == 3 && alpha.size() == rgb.pixel_count(), "composite: shape mismatch");
  ImageBuffer out = rgb;
  for (std::size_t p = 0; p < alpha.size(); ++p) {
    auto px = out.pixel(p);
    for (int c = 0; c < 3; ++c) px[c] = alpha[p] * px[c] + (1.0 - alpha[p]) * background[c];
  }
  return out;
}

ImageBuffer clamp01(ImageBuffer img) {
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
  return img;
}

}  // namespace dualsplat
