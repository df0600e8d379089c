// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end training runs over a dataset directory, with the run directory
// layout:
//   config.txt            effective configuration
//   run.json              dataset path and fingerprints
//   metrics.jsonl         one record per iteration
//   ckpt_<k>.bin          checkpoint after k iterations
//   model<m>.ply          final clouds, one per model
//   selected_model.json   index and file of the output model
//   uncertainty_final.png normalized uncertainty of the last iteration
//   eval.jsonl            held-out evaluation of the selected model

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dualsplat/train.hpp"

namespace dualsplat {

// Returning false stops the run after the current iteration (and its
// checkpoint, if one was due) without writing final outputs.
using ProgressCallback = std::function<bool(int iteration, const StepResult& step)>;

struct RunOptions {
  TrainConfig config;
  std::filesystem::path data_dir;
  std::filesystem::path run_dir;
  bool resume = false;
  ProgressCallback progress;
};

struct RunSummary {
  int iterations = 0;  // completed steps
  bool completed = false;
  std::size_t selected_model = 0;
  std::vector<std::size_t> points;
};

RunSummary run_training(const RunOptions& options);

// Uncertainty of the models in `state` seen from `cam` on a white
// background: |difference| for two models, population standard deviation for
// more, the rendered variance for the learnable-variance model, zero otherwise.
ImageBuffer model_uncertainty(const TrainerState& state, const Camera& cam);

// Renders the checkpoint at `iteration` from training view `view` and writes
// the min-max-normalized map as a grayscale PNG. A missing checkpoint fails
// with kIo naming the nearest available iteration.
void uncertainty_viz(const std::filesystem::path& run_dir, int iteration, int view,
                     const std::filesystem::path& out_png);

}  // namespace dualsplat
