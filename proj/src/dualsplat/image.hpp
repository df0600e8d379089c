// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dualsplat/error.hpp"

namespace dualsplat {

// Row-major, channel-interleaved float64 image.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<double> data;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, int c = 3, double fill = 0.0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {
    require(w >= 0 && h >= 0 && c >= 1, "invalid image dimensions");
  }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t size() const { return data.size(); }

  double& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  std::span<double> pixel(std::size_t p) { return {data.data() + p * channels, std::size_t(channels)}; }
  std::span<const double> pixel(std::size_t p) const {
    return {data.data() + p * channels, std::size_t(channels)};
  }

  bool same_shape(const ImageBuffer& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }

  bool operator==(const ImageBuffer&) const = default;
};

inline void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
  require(a.same_shape(b) && a.data.size() == b.data.size(),
          std::string(what) + ": image shapes differ");
}

// Area-average resampling to (width, height); each output pixel is the
// coverage-weighted mean of the input pixels under its footprint.
ImageBuffer resample_area(const ImageBuffer& src, int width, int height);

// alpha * rgb + (1 - alpha) * background, per pixel.
ImageBuffer composite(const ImageBuffer& rgb, std::span<const double> alpha,
                      const double background[3]);

ImageBuffer clamp01(ImageBuffer img);

}  // namespace dualsplat
