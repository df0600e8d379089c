// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "dualsplat/error.hpp"
#include "dualsplat/train.hpp"
#include "test_util.hpp"

namespace dualsplat {
namespace {

using testing::code_of;
using testing::small_dataset;

TrainConfig quick_config(int iters = 50, int points = 300) {
  TrainConfig c;
  c.total_iters = iters;
  c.init_points = points;
  c.lambda_l = 0.0;
  return c;
}

bool all_finite(const GaussianCloud& c) {
  try {
    c.validate();
    return true;
  } catch (const Error&) {
    return false;
  }
}

// ---- Adam -------------------------------------------------------------------

TEST(Adam, ZeroGradientLeavesParametersAndDecaysMoments) {
  std::vector<double> p = {1.0, -2.0}, g = {0.0, 0.0}, m = {0.4, -0.2}, v = {0.3, 0.1};
  adam_step(p, g, m, v, 0.1, {}, 1);
  // A nonzero first moment still moves the parameter; with m = 0 it does not.
  std::vector<double> p0 = {1.0, -2.0}, m0 = {0.0, 0.0}, v0 = {0.3, 0.1};
  adam_step(p0, g, m0, v0, 0.1, {}, 3);
  EXPECT_EQ(p0, (std::vector<double>{1.0, -2.0}));
  EXPECT_DOUBLE_EQ(m[0], 0.9 * 0.4);
  EXPECT_DOUBLE_EQ(v[1], 0.999 * 0.1);
}

TEST(Adam, FirstStepIsSignTimesLearningRate) {
  std::vector<double> p = {0.0, 0.0, 0.0}, g = {3.0, -1e-3, 250.0}, m(3, 0.0), v(3, 0.0);
  adam_step(p, g, m, v, 0.01, {0.9, 0.999, 1e-15}, 1);
  EXPECT_NEAR(p[0], -0.01, 1e-15);
  EXPECT_NEAR(p[1], 0.01, 1e-12);
  EXPECT_NEAR(p[2], -0.01, 1e-15);
}

TEST(Adam, SecondStepMatchesHandFormula) {
  std::vector<double> p = {0.5}, m = {0.0}, v = {0.0};
  const double g1 = 0.3, g2 = -0.7, lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  adam_step(p, std::vector<double>{g1}, m, v, lr, {b1, b2, eps}, 1);
  adam_step(p, std::vector<double>{g2}, m, v, lr, {b1, b2, eps}, 2);
  double mm = 0, vv = 0, x = 0.5;
  for (int t = 1; t <= 2; ++t) {
    const double g = t == 1 ? g1 : g2;
    mm = b1 * mm + (1 - b1) * g;
    vv = b2 * vv + (1 - b2) * g * g;
    x -= lr * (mm / (1 - std::pow(b1, t))) / (std::sqrt(vv / (1 - std::pow(b2, t))) + eps);
  }
  EXPECT_NEAR(p[0], x, 1e-15);
}

TEST(Adam, GroupsWithDifferentRatesAreIndependent) {
  std::vector<double> a = {0.0}, b = {0.0}, ma = {0.0}, va = {0.0}, mb = {0.0}, vb = {0.0};
  adam_step(a, std::vector<double>{1.0}, ma, va, 0.1, {}, 1);
  adam_step(b, std::vector<double>{1.0}, mb, vb, 0.001, {}, 1);
  EXPECT_NEAR(a[0], -0.1, 1e-14);
  EXPECT_NEAR(b[0], -0.001, 1e-14);
}

TEST(Adam, ShapeMismatchIsContractViolation) {
  std::vector<double> p(2), g(3), m(2), v(2);
  EXPECT_EQ(code_of([&] { adam_step(p, g, m, v, 0.1, {}, 1); }), ErrorCode::kContractViolation);
}

// ---- Schedules ---------------------------------------------------------------

TEST(Schedules, ResolutionMilestones) {
  const TrainConfig c;
  EXPECT_EQ(resolution_schedule(0, 5000, c.resolution_milestones), 0.25);
  EXPECT_EQ(resolution_schedule(999, 5000, c.resolution_milestones), 0.25);
  EXPECT_EQ(resolution_schedule(1000, 5000, c.resolution_milestones), 0.5);
  EXPECT_EQ(resolution_schedule(2499, 5000, c.resolution_milestones), 0.5);
  EXPECT_EQ(resolution_schedule(2500, 5000, c.resolution_milestones), 1.0);
  EXPECT_EQ(resolution_schedule(4999, 5000, c.resolution_milestones), 1.0);
}

TEST(Schedules, ElevationMilestones) {
  const TrainConfig c;
  EXPECT_EQ(elevation_schedule(0, 5000, c.elevation_milestones), (std::vector<int>{0}));
  EXPECT_EQ(elevation_schedule(2499, 5000, c.elevation_milestones), (std::vector<int>{0}));
  EXPECT_EQ(elevation_schedule(2500, 5000, c.elevation_milestones), (std::vector<int>{0, 1}));
  EXPECT_EQ(elevation_schedule(3999, 5000, c.elevation_milestones), (std::vector<int>{0, 1}));
  EXPECT_EQ(elevation_schedule(4000, 5000, c.elevation_milestones), (std::vector<int>{0, 1, 2}));
}

TEST(Schedules, ChangeExactlyAtMilestoneIterations) {
  const TrainConfig c;
  for (int total : {1, 7, 10, 333, 1000, 5000}) {
    std::set<int> expected_res, expected_elev;
    for (const auto& m : c.resolution_milestones)
      if (m.fraction > 0) expected_res.insert(static_cast<int>(std::ceil(m.fraction * total - 1e-9)));
    for (const auto& m : c.elevation_milestones)
      if (m.fraction > 0) expected_elev.insert(static_cast<int>(std::ceil(m.fraction * total - 1e-9)));
    std::set<int> res_changes, elev_changes;
    for (int it = 1; it < total; ++it) {
      if (resolution_schedule(it, total, c.resolution_milestones) !=
          resolution_schedule(it - 1, total, c.resolution_milestones))
        res_changes.insert(it);
      if (elevation_schedule(it, total, c.elevation_milestones) !=
          elevation_schedule(it - 1, total, c.elevation_milestones))
        elev_changes.insert(it);
    }
    std::erase_if(expected_res, [&](int i) { return i <= 0 || i >= total; });
    std::erase_if(expected_elev, [&](int i) { return i <= 0 || i >= total; });
    EXPECT_EQ(res_changes, expected_res) << "total " << total;
    EXPECT_EQ(elev_changes, expected_elev) << "total " << total;
  }
}

TEST(Schedules, PositionRateDecaysLogLinearly) {
  const TrainConfig c;
  EXPECT_NEAR(position_learning_rate(c, 0), 1.6e-4, 1e-18);
  EXPECT_NEAR(position_learning_rate(c, c.total_iters), 1.6e-6, 1e-18);
  EXPECT_NEAR(position_learning_rate(c, c.total_iters / 2), 1.6e-5, 1e-17);
}

TEST(Background, FixedWhiteWhenDisabled) {
  Rng rng(5);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_background(rng, false), Vec3::Ones());
}

TEST(Background, ChannelMeansAreOneHalf) {
  Rng rng(6);
  Vec3 sum = Vec3::Zero();
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Vec3 b = sample_background(rng, true);
    ASSERT_TRUE((b.array() >= 0).all() && (b.array() <= 1).all());
    sum += b;
  }
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(sum[c] / n, 0.5, 0.01);
}

// ---- Initialization -----------------------------------------------------------

TEST(Init, CloudShapeAndActivatedValues) {
  const GaussianCloud c = random_init_cloud(4096, 1.0, 0.1, 0.5, 3);
  ASSERT_EQ(c.size(), 4096u);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_LE(c.positions[i].norm(), 1.0);
    EXPECT_NEAR(sigmoid(c.opacity_logits[i]), 0.1, 1e-15);
    EXPECT_EQ(c.rotations[i], Vec4(1, 0, 0, 0));
    EXPECT_EQ(c.colors_dc[i], Vec3::Constant(0.5));
    EXPECT_EQ(c.log_scales[i].x(), c.log_scales[i].y());
    EXPECT_EQ(c.log_scales[i].y(), c.log_scales[i].z());
  }
}

TEST(Init, ScaleIsRootMeanOfThreeNearestSquaredDistances) {
  const GaussianCloud c = random_init_cloud(60, 1.0, 0.1, 0.5, 4);
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < c.size(); ++j)
      if (j != i) d.push_back((c.positions[i] - c.positions[j]).squaredNorm());
    std::sort(d.begin(), d.end());
    EXPECT_NEAR(std::exp(c.log_scales[i].x()), std::sqrt((d[0] + d[1] + d[2]) / 3.0), 1e-12);
  }
}

TEST(Init, ModelCountsAndSeeds) {
  TrainConfig c = quick_config(10, 4096);
  TrainerState s = init_models(c);
  ASSERT_EQ(s.models.size(), 2u);
  EXPECT_EQ(s.models[0].size(), 4096u);
  EXPECT_EQ(s.models[1].size(), 4096u);
  EXPECT_FALSE(s.models[0].cloud == s.models[1].cloud);
  c.seed2 = c.seed1;
  s = init_models(c);
  EXPECT_TRUE(s.models[0].cloud == s.models[1].cloud);
  c.ablation_mode = AblationMode::kSingleBaseline;
  EXPECT_EQ(init_models(c).models.size(), 1u);
  c.ablation_mode = AblationMode::kEnsemble;
  c.ensemble_k = 4;
  EXPECT_EQ(init_models(c).models.size(), 4u);
  c.ablation_mode = AblationMode::kLearnableVariance;
  s = init_models(c);
  EXPECT_EQ(s.models[0].log_variance.size(), s.models[0].size());
}

TEST(Init, DistinctSeedsGiveDistinctRenders) {
  const Camera cam;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TrainConfig c = quick_config(10, 200);
    c.seed1 = seed;
    c.seed2 = seed + 100;
    const TrainerState s = init_models(c);
    const auto a = render(s.models[0].cloud, cam, Vec3::Ones()).image;
    const auto b = render(s.models[1].cloud, cam, Vec3::Ones()).image;
    EXPECT_GT(testing::max_abs_diff(a, b), 0.0) << "seed " << seed;
  }
}

TEST(Init, InvalidConfigsAreRejected) {
  TrainConfig c;
  c.init_points = 0;
  EXPECT_EQ(code_of([&] { init_models(c); }), ErrorCode::kConfig);
  c = TrainConfig();
  c.total_iters = 0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kConfig);
  c = TrainConfig();
  c.lr_color = 0.0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kConfig);
  c = TrainConfig();
  c.resolution_milestones = {{0.0, 0.25}, {0.5, 0.5}, {0.5, 1.0}};
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kConfig);
  c = TrainConfig();
  c.elevation_milestones = {{0.0, {0}}, {1.2, {0, 1}}};
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kConfig);
}

TEST(Init, AblationModeNamesRoundTrip) {
  for (auto m : {AblationMode::kDual, AblationMode::kSingleBaseline,
                 AblationMode::kLearnableVariance, AblationMode::kEnsemble})
    EXPECT_EQ(parse_ablation_mode(ablation_mode_name(m)), m);
  EXPECT_EQ(code_of([] { parse_ablation_mode("triple"); }), ErrorCode::kConfig);
}

// ---- Densification ----------------------------------------------------------

ModelState model_of(const GaussianCloud& cloud) {
  ModelState m;
  m.cloud = cloud;
  m.moments.reset(cloud.size(), false);
  m.grad_accum.assign(cloud.size(), 0.0);
  m.grad_count.assign(cloud.size(), 0);
  m.densify_rng = Rng(99);
  return m;
}

TEST(Densify, ZeroGradientsOnlyPrune) {
  GaussianCloud c;
  c.push_back(Vec3::Zero(), Vec3::Constant(-2), Vec4(1, 0, 0, 0), Vec3::Constant(0.5), logit(0.5));
  c.push_back(Vec3::UnitX(), Vec3::Constant(-2), Vec4(1, 0, 0, 0), Vec3::Constant(0.5), logit(0.001));
  c.push_back(Vec3::UnitY(), Vec3::Constant(-6), Vec4(1, 0, 0, 0), Vec3::Constant(0.5), logit(0.9));
  ModelState m = model_of(c);
  densify_and_prune(m, TrainConfig(), 1.0);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.cloud.positions[0], Vec3::Zero());
  EXPECT_EQ(m.cloud.positions[1], Vec3::UnitY());
}

TEST(Densify, LargeHighGradientPointSplitsIntoTwo) {
  GaussianCloud c;
  const Vec4 q = Vec4(0.9, 0.1, -0.3, 0.2).normalized();
  const Vec3 log_s(std::log(0.2), std::log(0.05), std::log(0.1));
  c.push_back(Vec3(0.1, 0.2, 0.3), log_s, q, Vec3(0.2, 0.4, 0.6), logit(0.7));
  ModelState m = model_of(c);
  m.grad_accum[0] = 0.01;
  m.grad_count[0] = 2;
  m.moments.m.positions[0] = Vec3::Ones();
  densify_and_prune(m, TrainConfig(), 1.0);
  ASSERT_EQ(m.size(), 2u);
  const Mat3 r = quat_to_rotation(q);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR((m.cloud.log_scales[i] - log_s).maxCoeff(), -std::log(1.6), 1e-15);
    EXPECT_NEAR((m.cloud.log_scales[i] - log_s).minCoeff(), -std::log(1.6), 1e-15);
    EXPECT_EQ(m.cloud.colors_dc[i], Vec3(0.2, 0.4, 0.6));
    // Within 5 standard deviations of the parent along each principal axis.
    const Vec3 local = r.transpose() * (m.cloud.positions[i] - Vec3(0.1, 0.2, 0.3));
    for (int a = 0; a < 3; ++a) EXPECT_LT(std::abs(local[a]), 5 * std::exp(log_s[a]));
    EXPECT_EQ(m.moments.m.positions[i], Vec3::Zero());
    EXPECT_EQ(m.grad_accum[i], 0.0);
    EXPECT_EQ(m.grad_count[i], 0);
  }
  EXPECT_NE(m.cloud.positions[0], m.cloud.positions[1]);
}

TEST(Densify, SmallHighGradientPointIsCloned) {
  GaussianCloud c;
  c.push_back(Vec3(0.1, 0.0, 0.0), Vec3::Constant(std::log(0.001)), Vec4(1, 0, 0, 0),
              Vec3::Constant(0.3), logit(0.6));
  c.push_back(Vec3(-0.5, 0.0, 0.0), Vec3::Constant(std::log(0.001)), Vec4(1, 0, 0, 0),
              Vec3::Constant(0.3), logit(0.6));
  ModelState m = model_of(c);
  m.grad_accum[0] = 1e-3;
  m.grad_count[0] = 1;
  m.moments.v.colors_dc[0] = Vec3::Constant(0.25);
  densify_and_prune(m, TrainConfig(), 1.0);
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.cloud.positions[2], c.positions[0]);
  EXPECT_EQ(m.cloud.log_scales[2], c.log_scales[0]);
  EXPECT_EQ(m.moments.v.colors_dc[0], Vec3::Constant(0.25));  // survivor keeps its moments
  EXPECT_EQ(m.moments.v.colors_dc[2], Vec3::Zero());          // the clone starts fresh
}

TEST(Densify, BelowThresholdGradientIsIgnored) {
  GaussianCloud c;
  c.push_back(Vec3::Zero(), Vec3::Constant(-1), Vec4(1, 0, 0, 0), Vec3::Constant(0.3), logit(0.6));
  ModelState m = model_of(c);
  m.grad_accum[0] = 3e-4;
  m.grad_count[0] = 2;  // mean 1.5e-4 < 2e-4
  densify_and_prune(m, TrainConfig(), 1.0);
  EXPECT_EQ(m.size(), 1u);
  EXPECT_EQ(m.cloud, c);
}

TEST(Densify, RespectsMaxPoints) {
  Rng rng(12);
  GaussianCloud c = testing::random_cloud(rng, 10);
  for (auto& o : c.opacity_logits) o = logit(0.5);
  ModelState m = model_of(c);
  std::fill(m.grad_accum.begin(), m.grad_accum.end(), 1.0);
  std::fill(m.grad_count.begin(), m.grad_count.end(), 1);
  TrainConfig cfg;
  cfg.max_points = 13;
  densify_and_prune(m, cfg, 1.0);
  EXPECT_LE(m.size(), 13u);
  EXPECT_GE(m.size(), 1u);
}

TEST(Densify, NeverEmptiesTheCloud) {
  GaussianCloud c;
  c.push_back(Vec3::Zero(), Vec3::Constant(-2), Vec4(1, 0, 0, 0), Vec3::Constant(0.5), logit(0.001));
  c.push_back(Vec3::UnitX(), Vec3::Constant(-2), Vec4(1, 0, 0, 0), Vec3::Constant(0.5), logit(0.002));
  ModelState m = model_of(c);
  densify_and_prune(m, TrainConfig(), 1.0);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.cloud.positions[0], Vec3::UnitX());
}

TEST(Densify, OpacityResetCapsAndClearsMoments) {
  GaussianCloud c;
  c.push_back(Vec3::Zero(), Vec3::Constant(-2), Vec4(1, 0, 0, 0), Vec3::Constant(0.5), logit(0.8));
  c.push_back(Vec3::UnitX(), Vec3::Constant(-2), Vec4(1, 0, 0, 0), Vec3::Constant(0.5), logit(0.005));
  ModelState m = model_of(c);
  m.moments.m.opacity_logits = {0.3, 0.2};
  reset_opacity(m, TrainConfig());
  EXPECT_NEAR(sigmoid(m.cloud.opacity_logits[0]), 0.01, 1e-15);
  EXPECT_EQ(m.cloud.opacity_logits[1], logit(0.005));
  EXPECT_EQ(m.moments.m.opacity_logits, (std::vector<double>{0.0, 0.0}));
}

// ---- Training steps -----------------------------------------------------------

class TrainStepTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { data_ = new PseudoDataset(small_dataset()); }
  static void TearDownTestSuite() {
    delete data_;
    data_ = nullptr;
  }
  static PseudoDataset* data_;
};
PseudoDataset* TrainStepTest::data_ = nullptr;

TEST_F(TrainStepTest, SingleBaselineHasNoUncertainty) {
  TrainConfig c = quick_config();
  c.ablation_mode = AblationMode::kSingleBaseline;
  TrainerState s = init_models(c);
  for (int i = 0; i < 5; ++i) {
    const StepResult r = train_step(s, *data_, c);
    for (double v : r.uncertainty.data) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(r.loss.l1_u_model2, 0.0);
  }
  EXPECT_EQ(s.models.size(), 1u);
}

TEST_F(TrainStepTest, IdenticalModelsStayIdentical) {
  TrainConfig c = quick_config(100);
  c.seed2 = c.seed1;
  TrainerState s = init_models(c);
  for (int i = 0; i < 100; ++i) {
    const StepResult r = train_step(s, *data_, c);
    ASSERT_EQ(r.loss.l1_u_model1, r.loss.l1_u_model2) << "step " << i;
    for (double v : r.uncertainty.data) ASSERT_EQ(v, 0.0);
  }
  EXPECT_TRUE(s.models[0].cloud == s.models[1].cloud);
}

TEST_F(TrainStepTest, DualWithZeroLambdaMatchesIndependentBaselines) {
  TrainConfig dual = quick_config(30);
  dual.lambda = 0.0;
  TrainerState d = init_models(dual);
  TrainConfig single = dual;
  single.ablation_mode = AblationMode::kSingleBaseline;
  TrainerState s1 = init_models(single);
  single.seed1 = dual.seed2;
  TrainerState s2 = init_models(single);
  for (int i = 0; i < 30; ++i) {
    train_step(d, *data_, dual);
    train_step(s1, *data_, single);
    train_step(s2, *data_, single);
  }
  EXPECT_TRUE(d.models[0].cloud == s1.models[0].cloud);
  EXPECT_TRUE(d.models[1].cloud == s2.models[0].cloud);
}

TEST_F(TrainStepTest, BothModelsShareTheSampledBackground) {
  TrainConfig c = quick_config();
  c.seed2 = c.seed1;
  TrainerState s = init_models(c);
  Rng bg_rng = s.background_rng;
  for (int i = 0; i < 10; ++i) {
    const StepResult r = train_step(s, *data_, c);
    EXPECT_EQ(r.background, sample_background(bg_rng, true));
    for (double v : r.uncertainty.data) EXPECT_EQ(v, 0.0);
  }
}

TEST_F(TrainStepTest, StepsFollowSchedulesAndActiveOrbits) {
  TrainConfig c = quick_config(40);
  TrainerState s = init_models(c);
  for (int i = 0; i < 40; ++i) {
    const StepResult r = train_step(s, *data_, c);
    const Camera& full = data_->frames[r.view].camera;
    EXPECT_EQ(r.ratio, training_ratio(resolution_schedule(i, 40, c.resolution_milestones),
                                      full.width, full.height));
    EXPECT_EQ(r.active_orbits, elevation_schedule(i, 40, c.elevation_milestones));
    const int orbit = data_->frames[r.view].orbit;
    EXPECT_TRUE(std::find(r.active_orbits.begin(), r.active_orbits.end(), orbit) !=
                r.active_orbits.end());
    const int expected_w = static_cast<int>(std::lround(r.ratio * data_->frames[0].camera.width));
    EXPECT_EQ(r.uncertainty.width, expected_w);
  }
}

TEST_F(TrainStepTest, EmptyActiveSetIsScheduleError) {
  TrainConfig c = quick_config();
  c.elevation_milestones = {{0.0, {7}}};
  TrainerState s = init_models(c);
  EXPECT_EQ(code_of([&] { train_step(s, *data_, c); }), ErrorCode::kSchedule);
}

TEST_F(TrainStepTest, FullRunIsDeterministic) {
  TrainConfig c = quick_config(60);
  c.densify_start = 20;
  c.densify_interval = 20;
  c.opacity_reset_interval = 25;
  TrainerState a = init_models(c), b = init_models(c);
  for (int i = 0; i < 60; ++i) {
    train_step(a, *data_, c);
    train_step(b, *data_, c);
  }
  EXPECT_TRUE(a == b);
}

TEST_F(TrainStepTest, RunWithDensificationStaysFiniteAndBounded) {
  TrainConfig c = quick_config(200, 400);
  c.densify_start = 20;
  c.densify_interval = 20;
  c.max_points = 600;
  c.densify_grad_threshold = 1e-5;
  TrainerState s = init_models(c);
  bool grew = false;
  for (int i = 0; i < 200; ++i) {
    const StepResult r = train_step(s, *data_, c);
    ASSERT_TRUE(std::isfinite(r.loss.total));
    for (const auto& m : s.models) {
      ASSERT_TRUE(all_finite(m.cloud)) << "step " << i;
      ASSERT_GE(m.size(), 1u);
      ASSERT_LE(m.size(), 600u);
      ASSERT_EQ(m.grad_accum.size(), m.size());
      ASSERT_EQ(m.moments.m.size(), m.size());
      grew = grew || m.size() > 400;
    }
  }
  EXPECT_TRUE(grew);
}

TEST_F(TrainStepTest, ConsistentTrainingLossDecreases) {
  TrainConfig c = quick_config(400, 500);
  c.densify_start = 100;
  TrainerState s = init_models(c);
  std::vector<double> l1;
  for (int i = 0; i < 400; ++i) l1.push_back(train_step(s, *data_, c).loss.l1_u_model1);
  const double first = std::accumulate(l1.begin(), l1.begin() + 100, 0.0) / 100;
  const double last = std::accumulate(l1.end() - 100, l1.end(), 0.0) / 100;
  EXPECT_LT(last, first);
}

TEST_F(TrainStepTest, OtherAblationModesTrain) {
  for (auto mode : {AblationMode::kLearnableVariance, AblationMode::kEnsemble}) {
    TrainConfig c = quick_config(30);
    c.ablation_mode = mode;
    TrainerState s = init_models(c);
    const TrainerState before = s;
    for (int i = 0; i < 30; ++i) {
      const StepResult r = train_step(s, *data_, c);
      ASSERT_TRUE(std::isfinite(r.loss.total));
      for (double v : r.uncertainty.data) ASSERT_GE(v, 0.0);
    }
    for (const auto& m : s.models) EXPECT_TRUE(all_finite(m.cloud));
    if (mode == AblationMode::kLearnableVariance)
      EXPECT_NE(s.models[0].log_variance, before.models[0].log_variance);
    else
      EXPECT_EQ(s.models.size(), 3u);
  }
}

TEST_F(TrainStepTest, SelectOutputModel) {
  TrainConfig c = quick_config();
  c.seed2 = c.seed1;
  TrainerState s = init_models(c);
  EXPECT_EQ(select_output_model(s, *data_), 0u);
  s.models[1].cloud = data_->scene;  // the truth reproduces every label
  EXPECT_EQ(select_output_model(s, *data_), 1u);
  EXPECT_EQ(select_output_model(s, *data_), 1u);
}

TEST(Schedules, TrainingRatioCoversTheSsimWindow) {
  EXPECT_EQ(training_ratio(0.25, 64, 64), 0.25);
  EXPECT_EQ(training_ratio(0.25, 24, 24), 11.0 / 24.0);
  const Camera cam{0, 0, 4, 33.8, 24, 24};
  EXPECT_EQ(cam.scaled(training_ratio(0.25, 24, 24)).width, 11);
  EXPECT_EQ(training_ratio(0.5, 8, 8), 1.0);
  EXPECT_EQ(training_ratio(1.0, 512, 512), 1.0);
}

TEST(SceneExtent, FromCameraRing) {
  std::vector<Camera> cams;
  for (int k = 0; k < 8; ++k) {
    Camera c;
    c.azimuth = 45.0 * k;
    cams.push_back(c);
  }
  EXPECT_NEAR(scene_extent_from_cameras(cams), 1.1 * 4.0, 1e-12);
}

}  // namespace
}  // namespace dualsplat
