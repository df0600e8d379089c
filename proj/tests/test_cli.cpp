// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

// Runs the dualsplat executable as a subprocess.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>

#include "dualsplat/io.hpp"
#include "dualsplat/render.hpp"
#include "test_util.hpp"

namespace dualsplat {
namespace {

using testing::TempDir;

struct Result {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

Result run(const std::string& args) {
  const std::string cmd = std::string(DUALSPLAT_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

// A small dataset generated once through the CLI.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli");
    std::ofstream(*dir_ / "spec.json")
        << R"({"primitives": [{"kind": "box", "center": [0, 0, 0], "size": 0.3,
                              "color": [0.2, 0.5, 0.9]}], "gaussians_per_primitive": 200})";
    const Result r = run("gen-data --scene " + (*dir_ / "spec.json").string() + " --out " +
                         (*dir_ / "ds").string() +
                         " --width 16 --height 16 --frames-per-orbit 3 --heldout 2 --jitter 0.01");
    ASSERT_EQ(r.exit_code, 0) << r.output;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string path(const std::string& rel) { return (*dir_ / rel).string(); }
  static TempDir* dir_;
};
TempDir* CliTest::dir_ = nullptr;

TEST(Cli, HelpListsSubcommands) {
  const Result r = run("--help");
  EXPECT_EQ(r.exit_code, 0);
  for (const char* sub : {"gen-data", "train", "render", "eval", "ab", "uncert-viz"})
    EXPECT_TRUE(contains(r.output, sub)) << sub;
}

TEST(Cli, TrainHelpShowsPublishedDefaults) {
  const Result r = run("train --help");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_TRUE(contains(r.output, "--iters TEXT [5000]")) << r.output;
  EXPECT_TRUE(contains(r.output, "--lambda TEXT [5]"));
  EXPECT_TRUE(contains(r.output, "--lambda-s TEXT [0.2]"));
  EXPECT_TRUE(contains(r.output, "--lambda-l TEXT [0.5]"));
  EXPECT_TRUE(contains(r.output, "--mode TEXT [dual]"));
  EXPECT_TRUE(contains(run("render --help").output, "--fov FLOAT [33.8]"));
  EXPECT_TRUE(contains(run("render --help").output, "--radius FLOAT [4]"));
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").exit_code, 2);
  EXPECT_EQ(run("frobnicate").exit_code, 2);
  EXPECT_EQ(run("train --data x").exit_code, 2);
  EXPECT_EQ(run("render --model m.ply --out o.png --bogus 1").exit_code, 2);
}

TEST_F(CliTest, DatasetLayout) {
  int frames = 0;
  for (const auto& e : fs::directory_iterator(path("ds/frames"))) frames += e.is_regular_file();
  EXPECT_EQ(frames, 9);
  EXPECT_TRUE(fs::exists(path("ds/manifest.json")));
  EXPECT_TRUE(fs::exists(path("ds/scene.ply")));
  EXPECT_EQ(read_manifest(path("ds"))["consistent"], false);
}

TEST_F(CliTest, GenDataIsByteReproducibleAndFlagsConsistency) {
  TempDir a("gen"), b("gen");
  const std::string flags = " --width 16 --height 16 --frames-per-orbit 2 --heldout 1 --seed 3";
  ASSERT_EQ(run("gen-data --out " + a.path().string() + flags).exit_code, 0);
  ASSERT_EQ(run("gen-data --out " + b.path().string() + flags).exit_code, 0);
  for (const auto& e : fs::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a.path());
    EXPECT_EQ(read_text_file(e.path()), read_text_file(b.path() / rel)) << rel;
  }
  EXPECT_EQ(read_manifest(a.path())["consistent"], true);
}

TEST(Cli, DefaultGenDataWritesSixtyThreeFrames) {
  TempDir d("gen");
  const Result r = run("gen-data --out " + d.path().string() + " --heldout 1");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(contains(r.output, "63 training frames"));
  EXPECT_TRUE(fs::exists(d / "frames/frame_062.png"));
  EXPECT_FALSE(fs::exists(d / "frames/frame_063.png"));
}

TEST(Cli, BadSceneSpecIsUsageErrorNamingTheField) {
  TempDir d("gen");
  std::ofstream(d / "bad.json") << R"({"primitives": [{"kind": "sphere", "center": [0,0,0],
                                       "size": 0.2, "color": [1,1,1], "radius": 3}]})";
  const Result r = run("gen-data --scene " + (d / "bad.json").string() + " --out " +
                       (d / "out").string());
  EXPECT_EQ(r.exit_code, 2) << r.output;
  EXPECT_TRUE(contains(r.output, "radius")) << r.output;
}

TEST_F(CliTest, RenderSingleViewMatchesLibraryBitExactly) {
  const std::string out = path("single.png");
  const Result r = run("render --model " + path("ds/scene.ply") +
                       " --azimuth 30 --elevation 10 --width 20 --height 16 --out " + out);
  ASSERT_EQ(r.exit_code, 0) << r.output;
  Camera cam;
  cam.azimuth = 30;
  cam.elevation = 10;
  cam.width = 20;
  cam.height = 16;
  const GaussianCloud model = load_cloud(path("ds/scene.ply"));
  save_image(path("ref.png"), render(model, cam, Vec3::Ones()).image);
  EXPECT_EQ(read_text_file(out), read_text_file(path("ref.png")));
}

TEST_F(CliTest, RenderOrbitWritesSixFramesIntoNewDirectory) {
  const std::string out = path("orbit/nested");
  const Result r = run("render --model " + path("ds/scene.ply") + " --orbit 6 --width 16 --height 16 --out " + out);
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const GaussianCloud model = load_cloud(path("ds/scene.ply"));
  for (int k = 0; k < 6; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%03d.png", k);
    ASSERT_TRUE(fs::exists(fs::path(out) / name)) << name;
    Camera cam;
    cam.azimuth = 60.0 * k;
    cam.elevation = 30.0 * std::sin(cam.azimuth * std::numbers::pi / 180.0);
    cam.width = cam.height = 16;
    save_image(path("ref.png"), render(model, cam, Vec3::Ones()).image);
    EXPECT_EQ(read_text_file(fs::path(out) / name), read_text_file(path("ref.png"))) << name;
  }
  EXPECT_FALSE(fs::exists(fs::path(out) / "frame_006.png"));
}

TEST_F(CliTest, RenderMissingModelIsRuntimeFailure) {
  EXPECT_EQ(run("render --model " + path("nope.ply") + " --out " + path("x.png")).exit_code, 1);
}

TEST_F(CliTest, EvalOfTruthHitsTheCap) {
  const Result r = run("eval --model " + path("ds/scene.ply") + " --data " + path("ds") +
                       " --out " + path("truth_eval.jsonl"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(contains(r.output, "PSNR        99.0000")) << r.output;
  EXPECT_TRUE(contains(r.output, "SSIM         1.0000")) << r.output;
  const auto lines = read_json_lines(path("truth_eval.jsonl"));
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(eval_report_from_json(lines[0]).psnr, (std::vector<double>{99.0, 99.0}));
}

TEST_F(CliTest, TrainModesEvalAbAndUncertaintyViz) {
  const std::string common = " --data " + path("ds") + " --iters 4 --init-points 50 --checkpoint-interval 2";
  Result r = run("train --out " + path("dual") + common);
  ASSERT_EQ(r.exit_code, 0) << r.output;
  for (const char* f : {"model1.ply", "model2.ply", "selected_model.json", "metrics.jsonl",
                        "uncertainty_final.png", "eval.jsonl", "config.txt", "ckpt_4.bin"})
    EXPECT_TRUE(fs::exists(path(std::string("dual/") + f))) << f;

  r = run("train --out " + path("base") + common + " --mode baseline --no-random-bg");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(fs::exists(path("base/model1.ply")));
  EXPECT_FALSE(fs::exists(path("base/model2.ply")));
  const std::string cfg = read_text_file(path("base/config.txt"));
  EXPECT_TRUE(contains(cfg, "ablation_mode = single_baseline"));
  EXPECT_TRUE(contains(cfg, "random_background = false"));
  EXPECT_TRUE(contains(cfg, "total_iters = 4"));

  r = run("ab --run-a " + path("dual") + " --run-b " + path("dual") + " --out " + path("ab.jsonl"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(contains(r.output, "SSIM         0.000000      0      0")) << r.output;
  r = run("ab --run-a " + path("dual") + " --run-b " + path("base"));
  EXPECT_EQ(r.exit_code, 0) << r.output;

  r = run("uncert-viz --run " + path("dual") + " --iter 2 --out " + path("u2.png"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const LoadedImage u = load_image(path("u2.png"));
  double lo = 1, hi = 0;
  for (double v : u.rgb.data) lo = std::min(lo, v), hi = std::max(hi, v);
  EXPECT_EQ(lo, 0.0);
  EXPECT_EQ(hi, 1.0);
  r = run("uncert-viz --run " + path("dual") + " --iter 3 --out " + path("u3.png"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_TRUE(contains(r.output, "nearest available iteration is 2")) << r.output;
}

TEST_F(CliTest, IdenticalModelsGiveBlackUncertainty) {
  const Result r = run("train --out " + path("same") + " --data " + path("ds") +
                       " --iters 2 --init-points 40 --checkpoint-interval 2 --seed1 4 --seed2 4");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  ASSERT_EQ(run("uncert-viz --run " + path("same") + " --iter 2 --out " + path("s.png")).exit_code, 0);
  for (double v : load_image(path("s.png")).rgb.data) ASSERT_EQ(v, 0.0);
}

TEST_F(CliTest, FlagBeatsFileBeatsDefault) {
  std::ofstream(path("c.txt")) << "total_iters = 3\nlambda = 2\ninit_points = 30\n";
  const Result r = run("train --out " + path("prec") + " --data " + path("ds") + " --config " +
                       path("c.txt") + " --lambda 1 --set lambda_s=0.3");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const std::string cfg = read_text_file(path("prec/config.txt"));
  EXPECT_TRUE(contains(cfg, "total_iters = 3\n"));
  EXPECT_TRUE(contains(cfg, "lambda = 1\n"));
  EXPECT_TRUE(contains(cfg, "lambda_s = 0.3\n"));
  EXPECT_TRUE(contains(cfg, "lambda_l = 0.5\n"));
}

TEST_F(CliTest, TrainErrorsBeforeTraining) {
  Result r = run("train --out " + path("bad1") + " --data " + path("nope"));
  EXPECT_EQ(r.exit_code, 1) << r.output;
  r = run("train --out " + path("bad2") + " --data " + path("ds") + " --set lamda=3");
  EXPECT_EQ(r.exit_code, 2) << r.output;
  EXPECT_TRUE(contains(r.output, "lamda"));
  EXPECT_FALSE(fs::exists(path("bad2/metrics.jsonl")));
  r = run("train --out " + path("bad3") + " --data " + path("ds") + " --mode quadruple");
  EXPECT_EQ(r.exit_code, 2) << r.output;
}

TEST_F(CliTest, ResumeContinuesTheMetricsLog) {
  const std::string common = " --data " + path("ds") + " --iters 4 --init-points 40 --checkpoint-interval 2";
  ASSERT_EQ(run("train --out " + path("r") + common).exit_code, 0);
  // Simulate an interruption after the first checkpoint.
  fs::remove(path("r/ckpt_4.bin"));
  truncate_metrics(path("r/metrics.jsonl"), 3);
  const Result r = run("train --resume --out " + path("r") + common);
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto m = read_metrics(path("r/metrics.jsonl"));
  ASSERT_EQ(m.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(m[i].iteration, i);
}

}  // namespace
}  // namespace dualsplat
