// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "dualsplat/data.hpp"
#include "test_util.hpp"

namespace dualsplat {
namespace {

using testing::code_of;

TEST(Orbits, ZeroAmplitudeIsFlat) {
  OrbitSpec s;
  for (const Camera& c : orbit_cameras(s)) EXPECT_EQ(c.elevation, 0.0);
}

TEST(Orbits, FormulaAndQuarterPeak) {
  OrbitSpec s;
  s.elevation_amplitude = 40.0;
  const auto cams = orbit_cameras(s);
  ASSERT_EQ(cams.size(), 21u);
  EXPECT_EQ(cams[0].azimuth, 0.0);
  EXPECT_EQ(cams[0].elevation, 0.0);
  std::size_t best = 0;
  for (std::size_t k = 0; k < cams.size(); ++k) {
    const double sweep = 360.0 * static_cast<double>(k) / 21.0;
    EXPECT_NEAR(cams[k].azimuth, sweep, 1e-12);
    EXPECT_NEAR(cams[k].elevation, 40.0 * std::sin(sweep * std::numbers::pi / 180.0), 1e-12);
    if (cams[k].elevation > cams[best].elevation) best = k;
  }
  EXPECT_EQ(best, 5u);  // nearest integer to 21 / 4
  EXPECT_NEAR(cams[best].elevation, 40.0 * std::sin(2 * std::numbers::pi * 5 / 21), 1e-12);
}

TEST(Orbits, PhaseShiftsAzimuthOnly) {
  OrbitSpec s;
  s.elevation_amplitude = -20.0;
  s.phase = 15.0;
  const auto shifted = orbit_cameras(s);
  s.phase = 0.0;
  const auto base = orbit_cameras(s);
  for (std::size_t k = 0; k < base.size(); ++k) {
    EXPECT_NEAR(shifted[k].azimuth, base[k].azimuth + 15.0, 1e-12);
    EXPECT_EQ(shifted[k].elevation, base[k].elevation);
  }
}

TEST(Orbits, DefaultThreeOrbitsGiveSixtyThreeCameras) {
  const auto orbits = default_orbits();
  ASSERT_EQ(orbits.size(), 3u);
  EXPECT_EQ(orbits[0].elevation_amplitude, 0.0);
  EXPECT_EQ(orbits[1].elevation_amplitude, -20.0);
  EXPECT_EQ(orbits[2].elevation_amplitude, 40.0);
  std::size_t total = 0;
  for (const auto& o : orbits) {
    EXPECT_EQ(o.radius, 4.0);
    EXPECT_EQ(o.fov_y, 33.8);
    total += orbit_cameras(o).size();
  }
  EXPECT_EQ(total, 63u);
}

TEST(Orbits, InvalidSpecRejected) {
  OrbitSpec s;
  s.frames_per_orbit = 0;
  EXPECT_EQ(code_of([&] { orbit_cameras(s); }), ErrorCode::kContractViolation);
}

TEST(Heldout, ThirtySixViewsTenDegreesApart) {
  const auto cams = heldout_cameras(36);
  ASSERT_EQ(cams.size(), 36u);
  for (std::size_t k = 0; k < cams.size(); ++k) {
    EXPECT_NEAR(cams[k].azimuth, 10.0 * static_cast<double>(k), 1e-12);
    EXPECT_GE(cams[k].elevation, -60.0);
    EXPECT_LE(cams[k].elevation, 60.0);
  }
  EXPECT_EQ(heldout_cameras(36), cams);
  EXPECT_NE(heldout_cameras(36, 1234), cams);
}

TEST(Heldout, DisjointFromTrainingPoses) {
  std::vector<Camera> train;
  for (const auto& o : default_orbits()) {
    const auto c = orbit_cameras(o);
    train.insert(train.end(), c.begin(), c.end());
  }
  for (const auto& h : heldout_cameras(36))
    for (const auto& t : train) EXPECT_FALSE(h == t);
}

TEST(Scene, SphereShellAndDeterminism) {
  SceneSpec spec;
  spec.primitives.push_back({PrimitiveKind::kSphere, Vec3(0.1, 0.0, 0.0), 0.5, Vec3(0.3, 0.6, 0.9)});
  spec.gaussians_per_primitive = 1000;
  spec.texture_noise = 0.0;
  const GaussianCloud c = make_scene(spec, 42);
  ASSERT_EQ(c.size(), 1000u);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double scale = std::exp(c.log_scales[i].x());
    EXPECT_NEAR((c.positions[i] - Vec3(0.1, 0, 0)).norm(), 0.5, 3 * scale);
    EXPECT_EQ(c.colors_dc[i], Vec3(0.3, 0.6, 0.9));
    EXPECT_GT(sigmoid(c.opacity_logits[i]), 0.9);
  }
  EXPECT_TRUE(make_scene(spec, 42) == c);
  EXPECT_FALSE(make_scene(spec, 43) == c);
}

TEST(Scene, BoxPointsLieOnFaces) {
  SceneSpec spec;
  spec.primitives.push_back({PrimitiveKind::kBox, Vec3::Zero(), 0.3, Vec3::Constant(0.5)});
  spec.gaussians_per_primitive = 500;
  for (const Vec3& p : make_scene(spec, 1).positions)
    EXPECT_NEAR(p.cwiseAbs().maxCoeff(), 0.3, 1e-15);
}

TEST(Scene, TextureNoiseStaysNearBaseColor) {
  SceneSpec spec = default_scene_spec();
  spec.gaussians_per_primitive = 200;
  const GaussianCloud c = make_scene(spec, 3);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec3 base = spec.primitives[i / 200].color;
    EXPECT_LE((c.colors_dc[i] - base).cwiseAbs().maxCoeff(), spec.texture_noise + 1e-15);
  }
}

TEST(Scene, InvalidSpecsRejected) {
  SceneSpec spec;
  EXPECT_EQ(code_of([&] { make_scene(spec, 0); }), ErrorCode::kContractViolation);
  spec.primitives.push_back({PrimitiveKind::kSphere, Vec3(0.8, 0, 0), 0.5, Vec3::Constant(0.5)});
  EXPECT_EQ(code_of([&] { make_scene(spec, 0); }), ErrorCode::kContractViolation);
}

class LabelTest : public ::testing::Test {
 protected:
  static GaussianCloud scene() {
    SceneSpec spec = default_scene_spec();
    spec.gaussians_per_primitive = 400;
    return make_scene(spec, 5);
  }
};

TEST_F(LabelTest, ConsistentLabelsAreTheUnperturbedRender) {
  const GaussianCloud s = scene();
  const auto orbits = default_orbits(24, 24, 4);
  const PseudoDataset ds = render_pseudo_labels(s, orbits, {}, 3);
  ASSERT_EQ(ds.frames.size(), 12u);
  for (const Frame& f : ds.frames) {
    const Frame ref = render_label(s, f.camera);
    EXPECT_EQ(f.image, ref.image);
    EXPECT_EQ(f.alpha, ref.alpha);
    EXPECT_EQ(f.camera, orbit_cameras(orbits[f.orbit])[f.index_in_orbit]);
  }
  ASSERT_EQ(ds.heldout.size(), 3u);
  for (std::size_t v = 0; v < ds.heldout.size(); ++v)
    EXPECT_EQ(ds.heldout_images[v], render(s, ds.heldout[v], Vec3::Ones()).image);
}

TEST_F(LabelTest, CompositingReproducesTheRenderOnThatBackground) {
  const GaussianCloud s = scene();
  Camera cam;
  cam.width = cam.height = 24;
  const Frame f = render_label(s, cam);
  const Vec3 bg(0.2, 0.7, 0.4);
  EXPECT_LT(testing::max_abs_diff(frame_on_background(f, bg), render(s, cam, bg).image), 1e-9);
}

TEST_F(LabelTest, JitterChangesLabelsButNotCamerasOrHeldout) {
  const GaussianCloud s = scene();
  const auto orbits = default_orbits(24, 24, 3);
  InconsistencySpec a{0.02, 0.0, 1}, b{0.02, 0.0, 2};
  const PseudoDataset da = render_pseudo_labels(s, orbits, a, 2);
  const PseudoDataset db = render_pseudo_labels(s, orbits, b, 2);
  const PseudoDataset clean = render_pseudo_labels(s, orbits, {}, 2);
  for (std::size_t i = 0; i < da.frames.size(); ++i) {
    EXPECT_EQ(da.frames[i].camera, db.frames[i].camera);
    EXPECT_NE(da.frames[i].image, db.frames[i].image);
  }
  EXPECT_EQ(da.heldout_images, clean.heldout_images);
  EXPECT_TRUE(da.scene == s);
}

TEST_F(LabelTest, PerturbationIsPerViewAndDeterministic) {
  const GaussianCloud s = scene();
  const InconsistencySpec inc{0.01, 0.05, 9};
  EXPECT_TRUE(perturb_scene(s, inc, 3) == perturb_scene(s, inc, 3));
  EXPECT_FALSE(perturb_scene(s, inc, 3) == perturb_scene(s, inc, 4));
  const GaussianCloud p = perturb_scene(s, inc, 0);
  double sq = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sq += (p.positions[i] - s.positions[i]).squaredNorm();
    EXPECT_TRUE((p.colors_dc[i].array() >= 0).all() && (p.colors_dc[i].array() <= 1).all());
  }
  EXPECT_NEAR(std::sqrt(sq / (3.0 * s.size())), 0.01, 0.001);
}

TEST_F(LabelTest, DisagreementGrowsWithJitter) {
  const GaussianCloud s = scene();
  Camera cam;
  cam.width = cam.height = 48;
  double prev = -1.0;
  for (double jitter : {0.0, 0.01, 0.02, 0.04}) {
    const InconsistencySpec inc{jitter, 0.0, 17};
    double sum = 0.0;
    for (std::size_t pair = 0; pair < 10; ++pair)
      sum += cross_view_disagreement(s, inc, cam, 2 * pair, 2 * pair + 1);
    const double mean = sum / 10.0;
    if (jitter == 0.0) EXPECT_EQ(mean, 0.0);
    EXPECT_GE(mean, prev) << "jitter " << jitter;
    if (jitter > 0.0) EXPECT_GT(mean, prev);
    prev = mean;
  }
}

TEST(Masks, BandAndInteriorOfASquare) {
  const int n = 12;
  std::vector<double> alpha(n * n, 0.0);
  for (int y = 3; y < 9; ++y)
    for (int x = 3; x < 9; ++x) alpha[y * n + x] = 1.0;
  const auto band = silhouette_band(alpha, n, n, 2);
  const auto interior = interior_mask(alpha, n, n, 2);
  // Inside: pixels within 2 of an outside pixel are band, leaving x,y in [5,6].
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const bool in = x >= 3 && x < 9 && y >= 3 && y < 9;
      const bool deep = x >= 5 && x < 7 && y >= 5 && y < 7;
      const bool near_square = x >= 1 && x < 11 && y >= 1 && y < 11;
      EXPECT_EQ(interior[y * n + x], deep) << x << "," << y;
      EXPECT_EQ(band[y * n + x], in ? !deep : near_square) << x << "," << y;
    }
  }
}

}  // namespace
}  // namespace dualsplat
