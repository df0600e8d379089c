// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualsplat/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>

#include "dualsplat/checkpoint.hpp"
#include "dualsplat/config.hpp"
#include "dualsplat/error.hpp"
#include "dualsplat/io.hpp"
#include "dualsplat/log.hpp"
#include "dualsplat/metrics.hpp"

namespace dualsplat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void clear_previous_run(const fs::path& run_dir) {
  fs::remove(run_dir / "metrics.jsonl");
  fs::remove(run_dir / "eval.jsonl");
  for (int k : list_checkpoints(run_dir)) fs::remove(checkpoint_path(run_dir, k));
}

}  // namespace

RunSummary run_training(const RunOptions& options) {
  const TrainConfig& config = options.config;
  config.validate();
  const fs::path& run_dir = options.run_dir;
  // Integrity and config problems surface before any state is touched.
  const PseudoDataset dataset = load_dataset(options.data_dir);
  const std::string config_text = config_to_string(config);
  const std::string config_fp = fingerprint(config_text);
  const std::string dataset_fp = fingerprint(read_manifest(options.data_dir).dump());

  TrainerState state;
  const auto available = options.resume ? list_checkpoints(run_dir) : std::vector<int>{};
  if (options.resume && available.empty())
    log_warning("no checkpoint in " + run_dir.string() + "; starting from scratch");
  if (!available.empty()) {
    Checkpoint ckpt = load_checkpoint(checkpoint_path(run_dir, available.back()));
    if (ckpt.config_text != config_text)
      fail(ErrorCode::kConfig, "cannot resume: the effective config differs from the checkpoint's");
    if (ckpt.state.models.size() != static_cast<std::size_t>(config.model_count()))
      fail(ErrorCode::kConfig, "cannot resume: checkpoint model count does not match the mode");
    state = std::move(ckpt.state);
    truncate_metrics(run_dir / "metrics.jsonl", state.iteration);
    log_info("resuming " + run_dir.string() + " at iteration " + std::to_string(state.iteration));
  } else {
    fs::create_directories(run_dir);
    clear_previous_run(run_dir);
    state = init_models(config);
  }
  save_config(run_dir / "config.txt", config);
  write_text_file(run_dir / "run.json",
                  json{{"data_dir", fs::absolute(options.data_dir).string()},
                       {"ablation_mode", ablation_mode_name(config.ablation_mode)},
                       {"config_fingerprint", config_fp},
                       {"dataset_fingerprint", dataset_fp}}
                          .dump(2) +
                      "\n");

  RunSummary summary;
  ImageBuffer last_uncertainty;
  while (state.iteration < config.total_iters) {
    const auto t0 = std::chrono::steady_clock::now();
    const int it = state.iteration;
    StepResult step = train_step(state, dataset, config);
    for (const auto& m : state.models) {
      if (!std::isfinite(step.loss.total))
        fail(ErrorCode::kContractViolation, "non-finite loss at iteration " + std::to_string(it));
      m.cloud.validate();
    }
    const auto t1 = std::chrono::steady_clock::now();

    MetricsRecord rec;
    rec.iteration = it;
    rec.l1_u_model1 = step.loss.l1_u_model1;
    rec.l1_u_model2 = step.loss.l1_u_model2;
    rec.d_ssim = step.loss.d_ssim;
    rec.lpips = step.loss.lpips;
    rec.total = step.loss.total;
    for (const auto& m : state.models) rec.points.push_back(m.size());
    rec.resolution_ratio = step.ratio;
    rec.active_orbits = step.active_orbits;
    rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    append_metrics(run_dir / "metrics.jsonl", rec);

    const int done = state.iteration;
    if ((config.checkpoint_interval > 0 && done % config.checkpoint_interval == 0) ||
        done == config.total_iters)
      save_checkpoint(checkpoint_path(run_dir, done), {state, config_text});
    last_uncertainty = std::move(step.uncertainty);
    if (options.progress && !options.progress(it, step)) break;
  }

  summary.iterations = state.iteration;
  for (const auto& m : state.models) summary.points.push_back(m.size());
  if (state.iteration < config.total_iters) return summary;

  for (std::size_t m = 0; m < state.models.size(); ++m)
    save_cloud(run_dir / ("model" + std::to_string(m + 1) + ".ply"), state.models[m].cloud);
  summary.selected_model = select_output_model(state, dataset);
  write_text_file(run_dir / "selected_model.json",
                  json{{"selected", summary.selected_model},
                       {"file", "model" + std::to_string(summary.selected_model + 1) + ".ply"}}
                          .dump(2) +
                      "\n");
  if (last_uncertainty.size() == 0) {
    // Resumed at the final checkpoint: no step ran, so recompute on view 0.
    last_uncertainty = model_uncertainty(state, dataset.frames.front().camera);
  }
  save_image(run_dir / "uncertainty_final.png", normalize_uncertainty_for_viz(last_uncertainty));
  if (!dataset.heldout.empty()) {
    EvalReport report =
        evaluate(state.models[summary.selected_model].cloud, dataset.scene, dataset.heldout);
    report.config_fingerprint = config_fp;
    report.dataset_fingerprint = dataset_fp;
    fs::remove(run_dir / "eval.jsonl");
    append_json_line(run_dir / "eval.jsonl", eval_report_to_json(report));
  }
  summary.completed = true;
  return summary;
}

ImageBuffer model_uncertainty(const TrainerState& state, const Camera& cam) {
  const Vec3 white = Vec3::Ones();
  const std::size_t k = state.models.size();
  require(k >= 1, "model_uncertainty: no models");
  if (k == 1) {
    const ModelState& m = state.models.front();
    if (m.log_variance.empty()) return ImageBuffer(cam.width, cam.height, 3);
    GaussianCloud payload = m.cloud;
    for (std::size_t i = 0; i < payload.size(); ++i)
      payload.colors_dc[i] = Vec3::Constant(std::exp(m.log_variance[i]));
    return render(payload, cam, Vec3::Zero()).image;
  }
  std::vector<ImageBuffer> renders;
  for (const auto& m : state.models) renders.push_back(render(m.cloud, cam, white).image);
  if (k == 2) return uncertainty_map(renders[0], renders[1]);
  ImageBuffer u(cam.width, cam.height, 3);
  for (std::size_t i = 0; i < u.size(); ++i) {
    double mean = 0.0;
    for (const auto& r : renders) mean += r.data[i];
    mean /= static_cast<double>(k);
    double var = 0.0;
    for (const auto& r : renders) var += (r.data[i] - mean) * (r.data[i] - mean);
    u.data[i] = std::sqrt(var / static_cast<double>(k));
  }
  return u;
}

void uncertainty_viz(const fs::path& run_dir, int iteration, int view, const fs::path& out_png) {
  const fs::path path = checkpoint_path(run_dir, iteration);
  if (!fs::exists(path)) {
    const auto available = list_checkpoints(run_dir);
    if (available.empty())
      fail(ErrorCode::kIo, "no checkpoint at iteration " + std::to_string(iteration) + " in " +
                               run_dir.string() + " and none available");
    int nearest = available.front();
    for (int k : available)
      if (std::abs(k - iteration) < std::abs(nearest - iteration)) nearest = k;
    fail(ErrorCode::kIo, "no checkpoint at iteration " + std::to_string(iteration) +
                             "; nearest available iteration is " + std::to_string(nearest));
  }
  const Checkpoint ckpt = load_checkpoint(path);
  json run;
  try {
    run = json::parse(read_text_file(run_dir / "run.json"));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kParse, (run_dir / "run.json").string() + ": " + e.what());
  }
  const json manifest = read_manifest(run.at("data_dir").get<std::string>());
  const json& frames = manifest.at("frames");
  if (view < 0 || view >= static_cast<int>(frames.size()))
    fail(ErrorCode::kContractViolation,
         "view " + std::to_string(view) + " out of range [0, " + std::to_string(frames.size()) + ")");
  const Camera cam = camera_from_json(frames[view].at("camera"));
  save_image(out_png, normalize_uncertainty_for_viz(model_uncertainty(ckpt.state, cam)));
}

}  // namespace dualsplat
