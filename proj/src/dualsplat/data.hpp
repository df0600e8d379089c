// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic multi-view pseudo-labels with controlled cross-view inconsistency.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dualsplat/core.hpp"
#include "dualsplat/image.hpp"
#include "dualsplat/render.hpp"

namespace dualsplat {

inline constexpr std::uint64_t kDefaultHeldoutSeed = 0x5eed0036;
inline constexpr double kHeldoutElevationLimit = 60.0;

struct OrbitSpec {
  int frames_per_orbit = 21;
  double elevation_amplitude = 0.0;  // degrees
  double phase = 0.0;                // degrees
  double radius = 4.0;
  double fov_y = 33.8;
  int width = 64;
  int height = 64;

  void validate() const;
  bool operator==(const OrbitSpec&) const = default;
};

// Three orbits with elevation amplitudes 0, -20 and 40 degrees.
std::vector<OrbitSpec> default_orbits(int width = 64, int height = 64, int frames_per_orbit = 21);

// Frame k of n: azimuth = 360 k / n + phase, elevation = amplitude * sin(360 k / n).
std::vector<Camera> orbit_cameras(const OrbitSpec& spec);

// n views with azimuth step 360 / n and elevations uniform in [-60, 60].
std::vector<Camera> heldout_cameras(int n, std::uint64_t seed = kDefaultHeldoutSeed,
                                    double radius = 4.0, double fov_y = 33.8, int width = 64,
                                    int height = 64);

enum class PrimitiveKind { kSphere, kBox, kBlob };

struct Primitive {
  PrimitiveKind kind = PrimitiveKind::kSphere;
  Vec3 center = Vec3::Zero();
  double size = 0.3;  // sphere / blob radius, box half-extent
  Vec3 color = Vec3::Constant(0.5);
};

struct SceneSpec {
  std::vector<Primitive> primitives;
  int gaussians_per_primitive = 2000;
  double texture_noise = 0.05;
  double gaussian_scale = 0.0;  // world-space std of each splat; 0 = from surface density
  double opacity = 0.98;

  void validate() const;
};

// One sphere and one box inside the unit sphere.
SceneSpec default_scene_spec();

GaussianCloud make_scene(const SceneSpec& spec, std::uint64_t seed);

struct InconsistencySpec {
  double geometry_jitter = 0.0;  // per-view per-Gaussian position noise std
  double color_jitter = 0.0;     // per-view per-Gaussian color noise std
  std::uint64_t seed = 0;

  void validate() const;
  bool consistent() const { return geometry_jitter == 0.0 && color_jitter == 0.0; }
};

struct Frame {
  Camera camera;
  ImageBuffer image;          // straight (unpremultiplied) color
  std::vector<double> alpha;  // accumulated opacity of the label render
  int orbit = 0;
  int index_in_orbit = 0;
};

struct PseudoDataset {
  std::vector<OrbitSpec> orbits;
  InconsistencySpec inconsistency;
  std::vector<Frame> frames;
  GaussianCloud scene;  // the unperturbed truth
  std::uint64_t heldout_seed = kDefaultHeldoutSeed;
  std::vector<Camera> heldout;
  std::vector<ImageBuffer> heldout_images;  // truth renders on white

  std::size_t size() const { return frames.size(); }
};

// The scene realization seen by view `view_index`.
GaussianCloud perturb_scene(const GaussianCloud& scene, const InconsistencySpec& inc,
                            std::size_t view_index);

// Label render of a cloud: straight color and alpha.
Frame render_label(const GaussianCloud& cloud, const Camera& cam);

PseudoDataset render_pseudo_labels(const GaussianCloud& scene, const std::vector<OrbitSpec>& orbits,
                                   const InconsistencySpec& inc, int heldout_views = 36,
                                   std::uint64_t heldout_seed = kDefaultHeldoutSeed);

// Composites frame onto background.
ImageBuffer frame_on_background(const Frame& frame, const Vec3& background);

// Pixels within `radius` px (Chebyshev) of the boundary of alpha > 0.5.
std::vector<bool> silhouette_band(std::span<const double> alpha, int width, int height,
                                  int radius = 2);
// alpha > 0.5 and outside the silhouette band.
std::vector<bool> interior_mask(std::span<const double> alpha, int width, int height,
                                int radius = 2);

// Mean |I_a - I_b| over the silhouette band of the unperturbed render, where
// I_a and I_b are the scene realizations of two views rendered from one
// shared camera.
double cross_view_disagreement(const GaussianCloud& scene, const InconsistencySpec& inc,
                               const Camera& cam, std::size_t view_a, std::size_t view_b);

}  // namespace dualsplat
