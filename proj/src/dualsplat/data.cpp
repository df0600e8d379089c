// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualsplat/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dualsplat/rng.hpp"

namespace dualsplat {

namespace {
constexpr double kPi = std::numbers::pi;

Vec3 random_unit(Rng& rng) {
  Vec3 v;
  do {
    v = Vec3(rng.normal(), rng.normal(), rng.normal());
  } while (v.norm() < 1e-12);
  return v.normalized();
}

double primitive_extent(const Primitive& p) {
  return p.kind == PrimitiveKind::kBox ? p.size * std::sqrt(3.0) : p.size;
}
}  // namespace

void OrbitSpec::validate() const {
  require(frames_per_orbit >= 1, "orbit frames_per_orbit must be >= 1");
  require(radius > 0.0, "orbit radius must be positive");
  require(fov_y > 0.0 && fov_y < 180.0, "orbit fov_y must lie in (0, 180)");
  require(width >= 1 && height >= 1, "orbit image size must be >= 1");
}

std::vector<OrbitSpec> default_orbits(int width, int height, int frames_per_orbit) {
  std::vector<OrbitSpec> orbits;
  for (double amplitude : {0.0, -20.0, 40.0}) {
    OrbitSpec s;
    s.frames_per_orbit = frames_per_orbit;
    s.elevation_amplitude = amplitude;
    s.width = width;
    s.height = height;
    orbits.push_back(s);
  }
  return orbits;
}

std::vector<Camera> orbit_cameras(const OrbitSpec& spec) {
  spec.validate();
  std::vector<Camera> cams;
  cams.reserve(spec.frames_per_orbit);
  for (int k = 0; k < spec.frames_per_orbit; ++k) {
    const double sweep = 360.0 * k / spec.frames_per_orbit;
    Camera c;
    c.azimuth = sweep + spec.phase;
    c.elevation = spec.elevation_amplitude * std::sin(sweep * kPi / 180.0);
    c.radius = spec.radius;
    c.fov_y = spec.fov_y;
    c.width = spec.width;
    c.height = spec.height;
    cams.push_back(c);
  }
  return cams;
}

std::vector<Camera> heldout_cameras(int n, std::uint64_t seed, double radius, double fov_y,
                                    int width, int height) {
  require(n >= 1, "heldout_cameras: n must be >= 1");
  Rng rng(seed);
  std::vector<Camera> cams;
  for (int k = 0; k < n; ++k) {
    Camera c;
    c.azimuth = 360.0 * k / n;
    c.elevation = rng.uniform(-kHeldoutElevationLimit, kHeldoutElevationLimit);
    c.radius = radius;
    c.fov_y = fov_y;
    c.width = width;
    c.height = height;
    cams.push_back(c);
  }
  return cams;
}

void SceneSpec::validate() const {
  require(!primitives.empty(), "scene spec: at least one primitive is required");
  require(gaussians_per_primitive >= 1, "scene spec: gaussians_per_primitive must be >= 1");
  require(texture_noise >= 0.0, "scene spec: texture_noise must be >= 0");
  require(gaussian_scale >= 0.0, "scene spec: gaussian_scale must be >= 0");
  require(opacity > 0.0 && opacity < 1.0, "scene spec: opacity must lie in (0, 1)");
  for (const auto& p : primitives) {
    require(p.size > 0.0, "scene spec: primitive size must be positive");
    require(p.center.norm() + primitive_extent(p) <= 1.0 + 1e-12,
            "scene spec: primitive leaves the unit bounding sphere");
    require((p.color.array() >= 0.0).all() && (p.color.array() <= 1.0).all(),
            "scene spec: primitive color must lie in [0, 1]");
  }
}

SceneSpec default_scene_spec() {
  SceneSpec s;
  s.primitives.push_back({PrimitiveKind::kSphere, Vec3(-0.3, 0.1, 0.05), 0.35, Vec3(0.9, 0.3, 0.2)});
  s.primitives.push_back({PrimitiveKind::kBox, Vec3(0.35, -0.1, -0.05), 0.25, Vec3(0.2, 0.45, 0.85)});
  s.gaussians_per_primitive = 2000;
  s.texture_noise = 0.08;
  return s;
}

GaussianCloud make_scene(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  GaussianCloud cloud;
  const int n = spec.gaussians_per_primitive;
  cloud.reserve(spec.primitives.size() * n);
  for (const auto& prim : spec.primitives) {
    double spacing = 0.0;
    switch (prim.kind) {
      case PrimitiveKind::kSphere: spacing = std::sqrt(4.0 * kPi * prim.size * prim.size / n); break;
      case PrimitiveKind::kBox: spacing = std::sqrt(24.0 * prim.size * prim.size / n); break;
      case PrimitiveKind::kBlob:
        spacing = std::cbrt(4.0 / 3.0 * kPi * prim.size * prim.size * prim.size / n);
        break;
    }
    const double scale = spec.gaussian_scale > 0.0 ? spec.gaussian_scale : 0.75 * spacing;
    for (int i = 0; i < n; ++i) {
      Vec3 pos;
      switch (prim.kind) {
        case PrimitiveKind::kSphere: pos = prim.center + prim.size * random_unit(rng); break;
        case PrimitiveKind::kBox: {
          const int face = static_cast<int>(rng.uniform_index(6));
          const int axis = face / 2;
          Vec3 local(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
          local[axis] = face % 2 ? 1.0 : -1.0;
          pos = prim.center + prim.size * local;
          break;
        }
        case PrimitiveKind::kBlob: {
          Vec3 local;
          do {
            local = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
          } while (local.squaredNorm() > 1.0);
          pos = prim.center + prim.size * local;
          break;
        }
      }
      Vec3 color = prim.color;
      for (int c = 0; c < 3; ++c)
        color[c] = std::clamp(color[c] + spec.texture_noise * rng.uniform(-1, 1), 0.0, 1.0);
      cloud.push_back(pos, Vec3::Constant(std::log(scale)), Vec4(1, 0, 0, 0), color,
                      logit(spec.opacity));
    }
  }
  return cloud;
}

void InconsistencySpec::validate() const {
  require(geometry_jitter >= 0.0 && std::isfinite(geometry_jitter),
          "inconsistency: geometry_jitter must be >= 0");
  require(color_jitter >= 0.0 && std::isfinite(color_jitter),
          "inconsistency: color_jitter must be >= 0");
}

GaussianCloud perturb_scene(const GaussianCloud& scene, const InconsistencySpec& inc,
                            std::size_t view_index) {
  inc.validate();
  GaussianCloud out = scene;
  if (inc.consistent()) return out;
  Rng rng(mix_seed(inc.seed, view_index));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (inc.geometry_jitter > 0.0)
      out.positions[i] += inc.geometry_jitter * Vec3(rng.normal(), rng.normal(), rng.normal());
    if (inc.color_jitter > 0.0) {
      for (int c = 0; c < 3; ++c)
        out.colors_dc[i][c] =
            std::clamp(out.colors_dc[i][c] + inc.color_jitter * rng.normal(), 0.0, 1.0);
    }
  }
  return out;
}

Frame render_label(const GaussianCloud& cloud, const Camera& cam) {
  const RenderOutput r = render(cloud, cam, Vec3::Zero());
  Frame f;
  f.camera = cam;
  f.alpha = r.alpha;
  f.image = ImageBuffer(cam.width, cam.height, 3);
  for (std::size_t p = 0; p < r.alpha.size(); ++p) {
    if (!(r.alpha[p] > 1e-12)) continue;
    for (int c = 0; c < 3; ++c)
      f.image.data[p * 3 + c] = std::clamp(r.image.data[p * 3 + c] / r.alpha[p], 0.0, 1.0);
  }
  return f;
}

PseudoDataset render_pseudo_labels(const GaussianCloud& scene, const std::vector<OrbitSpec>& orbits,
                                   const InconsistencySpec& inc, int heldout_views,
                                   std::uint64_t heldout_seed) {
  inc.validate();
  require(!orbits.empty(), "render_pseudo_labels: at least one orbit is required");
  PseudoDataset ds;
  ds.orbits = orbits;
  ds.inconsistency = inc;
  ds.scene = scene;
  std::size_t view = 0;
  for (std::size_t o = 0; o < orbits.size(); ++o) {
    const auto cams = orbit_cameras(orbits[o]);
    for (std::size_t k = 0; k < cams.size(); ++k, ++view) {
      Frame f = render_label(perturb_scene(scene, inc, view), cams[k]);
      f.orbit = static_cast<int>(o);
      f.index_in_orbit = static_cast<int>(k);
      ds.frames.push_back(std::move(f));
    }
  }
  if (heldout_views > 0) {
    const OrbitSpec& ref = orbits.front();
    ds.heldout_seed = heldout_seed;
    ds.heldout = heldout_cameras(heldout_views, heldout_seed, ref.radius, ref.fov_y, ref.width,
                                 ref.height);
    for (const auto& cam : ds.heldout)
      ds.heldout_images.push_back(render(scene, cam, Vec3::Ones()).image);
  }
  return ds;
}

ImageBuffer frame_on_background(const Frame& frame, const Vec3& background) {
  const double bg[3] = {background.x(), background.y(), background.z()};
  return composite(frame.image, frame.alpha, bg);
}

std::vector<bool> silhouette_band(std::span<const double> alpha, int width, int height, int radius) {
  require(alpha.size() == static_cast<std::size_t>(width) * height, "silhouette_band: size mismatch");
  std::vector<bool> band(alpha.size(), false);
  auto inside = [&](int x, int y) { return alpha[static_cast<std::size_t>(y) * width + x] > 0.5; };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const bool self = inside(x, y);
      for (int dy = -radius; dy <= radius && !band[y * width + x]; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= width || yy >= height) continue;
          if (inside(xx, yy) != self) {
            band[static_cast<std::size_t>(y) * width + x] = true;
            break;
          }
        }
      }
    }
  }
  return band;
}

std::vector<bool> interior_mask(std::span<const double> alpha, int width, int height, int radius) {
  const auto band = silhouette_band(alpha, width, height, radius);
  std::vector<bool> interior(alpha.size());
  for (std::size_t p = 0; p < alpha.size(); ++p) interior[p] = alpha[p] > 0.5 && !band[p];
  return interior;
}

double cross_view_disagreement(const GaussianCloud& scene, const InconsistencySpec& inc,
                               const Camera& cam, std::size_t view_a, std::size_t view_b) {
  const Vec3 white = Vec3::Ones();
  const RenderOutput truth = render(scene, cam, white);
  const auto band = silhouette_band(truth.alpha, cam.width, cam.height);
  const ImageBuffer a = render(perturb_scene(scene, inc, view_a), cam, white).image;
  const ImageBuffer b = render(perturb_scene(scene, inc, view_b), cam, white).image;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < band.size(); ++p) {
    if (!band[p]) continue;
    for (int c = 0; c < 3; ++c) sum += std::abs(a.data[p * 3 + c] - b.data[p * 3 + c]);
    count += 3;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace dualsplat
