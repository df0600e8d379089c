// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

// dualsplat: dataset generation, training, rendering, evaluation and
// uncertainty visualization over the C library.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dualsplat/dualsplat.h"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

class Failure {
 public:
  explicit Failure(ds_status status) : status_(status) {}
  int exit_code() const {
    return status_ == DS_ERR_INVALID_ARGUMENT || status_ == DS_ERR_CONFIG ? kExitUsage
                                                                          : kExitRuntime;
  }

 private:
  ds_status status_;
};

void check(ds_status status, const std::string& context) {
  if (status == DS_OK) return;
  std::fprintf(stderr, "dualsplat: %s: %s: %s\n", context.c_str(), ds_status_string(status),
               ds_last_error());
  throw Failure(status);
}

std::string default_of(const char* key) {
  ds_config* cfg = nullptr;
  check(ds_config_create(&cfg), "config");
  char buf[256];
  size_t needed = 0;
  const ds_status st = ds_config_get(cfg, key, buf, sizeof buf, &needed);
  ds_config_free(cfg);
  check(st, key);
  return buf;
}

// Each override is applied only when the flag was given, so flags beat the
// config file which beats built-in defaults.
struct ConfigFlag {
  std::string key;
  std::string value;
  CLI::Option* option = nullptr;
};

struct TrainArgs {
  std::string data, out, config_file, mode;
  bool no_random_bg = false;
  bool resume = false;
  std::vector<std::string> sets;
  std::vector<ConfigFlag> flags;
};

int progress_printer(const ds_step_info* info, void*) {
  if ((info->iteration + 1) % 100 == 0)
    std::fprintf(stderr, "iter %5d  total %.6f  l1u %.6f %.6f  dssim %.6f  res %.2f\n",
                 info->iteration + 1, info->total, info->l1_u_model1, info->l1_u_model2,
                 info->d_ssim, info->resolution_ratio);
  return 0;
}

void cmd_gen_data(const std::string& scene, const std::string& out, double jitter,
                  double color_jitter, unsigned long long seed, int width, int height, int frames,
                  int heldout) {
  ds_dataset_options opts = ds_dataset_options_default();
  opts.scene_spec_path = scene.empty() ? nullptr : scene.c_str();
  opts.geometry_jitter = jitter;
  opts.color_jitter = color_jitter;
  opts.seed = seed;
  opts.width = width;
  opts.height = height;
  opts.frames_per_orbit = frames;
  opts.heldout_views = heldout;
  check(ds_dataset_generate(&opts, out.c_str()), "gen-data");
  std::printf("wrote %d training frames and %d held-out views to %s\n", 3 * frames, heldout,
              out.c_str());
}

void cmd_train(const TrainArgs& args) {
  ds_config* cfg = nullptr;
  check(ds_config_create(&cfg), "config");
  std::unique_ptr<ds_config, decltype(&ds_config_free)> guard(cfg, ds_config_free);
  if (!args.config_file.empty()) check(ds_config_load(cfg, args.config_file.c_str()), "config");
  for (const auto& f : args.flags)
    if (f.option->count() > 0) check(ds_config_set(cfg, f.key.c_str(), f.value.c_str()), f.key);
  if (!args.mode.empty()) check(ds_config_set(cfg, "ablation_mode", args.mode.c_str()), "--mode");
  if (args.no_random_bg) check(ds_config_set(cfg, "random_background", "false"), "--no-random-bg");
  for (const auto& s : args.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "dualsplat: --set expects key=value, got '%s'\n", s.c_str());
      throw Failure(DS_ERR_INVALID_ARGUMENT);
    }
    check(ds_config_set(cfg, s.substr(0, eq).c_str(), s.substr(eq + 1).c_str()), "--set");
  }
  check(ds_config_validate(cfg), "config");
  int completed = 0;
  check(ds_train(cfg, args.data.c_str(), args.out.c_str(), args.resume ? 1 : 0, progress_printer,
                 nullptr, &completed),
        "train");
  std::printf("training %s; outputs in %s\n", completed ? "finished" : "stopped", args.out.c_str());
}

void cmd_render(const std::string& model, double azimuth, double elevation, int orbit,
                const std::string& out, int width, int height, double radius, double fov) {
  ds_cloud* cloud = nullptr;
  check(ds_cloud_load(model.c_str(), &cloud), "render");
  std::unique_ptr<ds_cloud, decltype(&ds_cloud_free)> guard(cloud, ds_cloud_free);
  ds_camera cam = ds_camera_default();
  cam.azimuth = azimuth;
  cam.elevation = elevation;
  cam.width = width;
  cam.height = height;
  cam.radius = radius;
  cam.fov_y = fov;

  auto render_to = [&](const ds_camera& c, const std::string& path) {
    ds_image* img = nullptr;
    check(ds_render(cloud, &c, nullptr, &img), "render");
    const ds_status st = ds_image_save_png(img, path.c_str());
    ds_image_free(img);
    check(st, "render");
  };
  if (orbit <= 0) {
    render_to(cam, out);
    std::printf("wrote %s\n", out.c_str());
    return;
  }
  std::filesystem::create_directories(out);
  for (int k = 0; k < orbit; ++k) {
    ds_camera c{};
    check(ds_orbit_camera(&cam, orbit, k, 30.0, &c), "render");
    char name[32];
    std::snprintf(name, sizeof name, "frame_%03d.png", k);
    render_to(c, (std::filesystem::path(out) / name).string());
  }
  std::printf("wrote %d orbit frames to %s\n", orbit, out.c_str());
}

void cmd_eval(const std::string& model, const std::string& data, const std::string& out) {
  ds_cloud* cloud = nullptr;
  check(ds_cloud_load(model.c_str(), &cloud), "eval");
  ds_eval_summary s{};
  const ds_status st = ds_evaluate(cloud, data.c_str(), out.empty() ? nullptr : out.c_str(), &s);
  ds_cloud_free(cloud);
  check(st, "eval");
  std::printf("%-8s %10s %10s\n", "metric", "mean", "std");
  std::printf("%-8s %10.4f %10.4f\n", "PSNR", s.psnr_mean, s.psnr_std);
  std::printf("%-8s %10.4f %10.4f\n", "SSIM", s.ssim_mean, s.ssim_std);
  std::printf("views    %10zu\n", s.views);
}

void cmd_ab(const std::vector<std::string>& a, const std::vector<std::string>& b,
            const std::string& out) {
  if (a.size() != b.size()) {
    std::fprintf(stderr, "dualsplat: ab: --run-a and --run-b need the same number of runs\n");
    throw Failure(DS_ERR_INVALID_ARGUMENT);
  }
  std::vector<const char*> pa, pb;
  for (const auto& s : a) pa.push_back(s.c_str());
  for (const auto& s : b) pb.push_back(s.c_str());
  ds_ab_summary s{};
  check(ds_ab_compare(pa.data(), pb.data(), pa.size(), out.empty() ? nullptr : out.c_str(), &s),
        "ab");
  std::printf("%-8s %12s %6s %6s %10s\n", "metric", "mean delta", "wins", "losses", "p-value");
  std::printf("%-8s %12.6f %6d %6d %10.4g\n", "PSNR", s.psnr_delta_mean, s.psnr_wins,
              s.psnr_losses, s.psnr_p_value);
  std::printf("%-8s %12.6f %6d %6d %10.4g\n", "SSIM", s.ssim_delta_mean, s.ssim_wins,
              s.ssim_losses, s.ssim_p_value);
  std::printf("pairs    %12zu\n", s.pairs);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian splatting with dual-model uncertainty-aware training"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.footer("Environment: GS_THREADS caps worker threads (0 = all cores).");

  // gen-data
  std::string gd_scene, gd_out;
  double gd_jitter = 0.0, gd_color_jitter = 0.0;
  unsigned long long gd_seed = 0;
  int gd_width = 64, gd_height = 64, gd_frames = 21, gd_heldout = 36;
  auto* gen = app.add_subcommand("gen-data", "Render a synthetic pseudo-label dataset");
  gen->add_option("--scene", gd_scene, "Scene spec JSON (default: one sphere and one box)")
      ->check(CLI::ExistingFile);
  gen->add_option("--out", gd_out, "Output dataset directory")->required();
  gen->add_option("--jitter", gd_jitter, "Per-view geometry jitter std")->capture_default_str();
  gen->add_option("--color-jitter", gd_color_jitter, "Per-view color jitter std")
      ->capture_default_str();
  gen->add_option("--seed", gd_seed, "Scene and jitter seed")->capture_default_str();
  gen->add_option("--width", gd_width, "Image width")->capture_default_str();
  gen->add_option("--height", gd_height, "Image height")->capture_default_str();
  gen->add_option("--frames-per-orbit", gd_frames, "Frames per orbit")->capture_default_str();
  gen->add_option("--heldout", gd_heldout, "Held-out evaluation views")->capture_default_str();

  // train
  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train on a dataset directory");
  train->add_option("--data", ta.data, "Dataset directory")->required();
  train->add_option("--out", ta.out, "Run directory")->required();
  train->add_option("--config", ta.config_file, "key = value config file")
      ->check(CLI::ExistingFile);
  train->add_option("--mode", ta.mode, "dual | baseline | learnable | ensemble-k")
      ->default_str(default_of("ablation_mode"));
  train->add_flag("--no-random-bg", ta.no_random_bg, "Train on a white background");
  train->add_flag("--resume", ta.resume, "Continue from the latest checkpoint");
  train->add_option("--set", ta.sets, "Override any config key: key=value (repeatable)")
      ->default_str("");
  const std::vector<std::pair<std::string, std::string>> config_flags = {
      {"iters", "total_iters"},        {"lambda", "lambda"},
      {"lambda-s", "lambda_s"},        {"lambda-l", "lambda_l"},
      {"seed1", "seed1"},              {"seed2", "seed2"},
      {"sample-seed", "sample_seed"},  {"init-points", "init_points"},
      {"ensemble-k", "ensemble_k"},    {"checkpoint-interval", "checkpoint_interval"}};
  ta.flags.reserve(config_flags.size());
  for (const auto& [flag, key] : config_flags) {
    ta.flags.push_back({key, "", nullptr});
    ConfigFlag& f = ta.flags.back();
    f.option = train->add_option("--" + flag, f.value, "Config key " + key)
                   ->default_str(default_of(key.c_str()));
  }

  // render
  std::string r_model, r_out;
  double r_azimuth = 0.0, r_elevation = 0.0, r_radius = 4.0, r_fov = 33.8;
  int r_orbit = 0, r_width = 64, r_height = 64;
  auto* rend = app.add_subcommand("render", "Render a PLY model");
  rend->add_option("--model", r_model, "Model PLY")->required();
  rend->add_option("--azimuth", r_azimuth, "Azimuth in degrees")->capture_default_str();
  rend->add_option("--elevation", r_elevation, "Elevation in degrees")->capture_default_str();
  rend->add_option("--orbit", r_orbit,
                   "Render n frames around a 30-degree sinusoidal orbit into --out (0 = single view)")
      ->capture_default_str();
  rend->add_option("--out", r_out, "Output PNG, or directory with --orbit")->required();
  rend->add_option("--width", r_width, "Image width")->capture_default_str();
  rend->add_option("--height", r_height, "Image height")->capture_default_str();
  rend->add_option("--radius", r_radius, "Camera distance")->capture_default_str();
  rend->add_option("--fov", r_fov, "Vertical field of view in degrees")->capture_default_str();

  // eval
  std::string e_model, e_data, e_out;
  auto* ev = app.add_subcommand("eval", "Score a model on held-out views");
  ev->add_option("--model", e_model, "Model PLY")->required();
  ev->add_option("--data", e_data, "Dataset directory")->required();
  ev->add_option("--out", e_out, "Report file (JSON lines)");

  // ab
  std::vector<std::string> ab_a, ab_b;
  std::string ab_out;
  auto* ab = app.add_subcommand("ab", "Compare paired runs through their eval.jsonl reports");
  ab->add_option("--run-a", ab_a, "Run directories of variant A (one per seed)")->required();
  ab->add_option("--run-b", ab_b, "Run directories of variant B, paired by position")->required();
  ab->add_option("--out", ab_out, "Report file (JSON lines)");

  // uncert-viz
  std::string u_run, u_out;
  int u_iter = 0, u_view = 0;
  auto* uv = app.add_subcommand("uncert-viz", "Write the uncertainty map of a checkpoint");
  uv->add_option("--run", u_run, "Run directory")->required();
  uv->add_option("--iter", u_iter, "Checkpoint iteration")->required();
  uv->add_option("--view", u_view, "Training view index")->capture_default_str();
  uv->add_option("--out", u_out, "Output PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen)
      cmd_gen_data(gd_scene, gd_out, gd_jitter, gd_color_jitter, gd_seed, gd_width, gd_height,
                   gd_frames, gd_heldout);
    else if (*train)
      cmd_train(ta);
    else if (*rend)
      cmd_render(r_model, r_azimuth, r_elevation, r_orbit, r_out, r_width, r_height, r_radius,
                 r_fov);
    else if (*ev)
      cmd_eval(e_model, e_data, e_out);
    else if (*ab)
      cmd_ab(ab_a, ab_b, ab_out);
    else if (*uv)
      check(ds_uncertainty_viz(u_run.c_str(), u_iter, u_view, u_out.c_str()), "uncert-viz");
  } catch (const Failure& f) {
    return f.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "dualsplat: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
