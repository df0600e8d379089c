// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dualsplat/core.hpp"
#include "dualsplat/data.hpp"
#include "dualsplat/image.hpp"
#include "dualsplat/metrics.hpp"

namespace dualsplat {

namespace fs = std::filesystem;

inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr double kShC0 = 0.28209479177387814;

// ---- PLY -------------------------------------------------------------------
//
// Binary little-endian PLY, one float32 record per vertex in this order:
//   x y z f_dc_0 f_dc_1 f_dc_2 opacity scale_0 scale_1 scale_2 rot_0..rot_3
// opacity is the logit, scales are logs, rot is (w, x, y, z) unnormalized and
// f_dc is the degree-0 SH coefficient, color = 0.5 + kShC0 * f_dc.

void save_cloud(const fs::path& path, const GaussianCloud& cloud);
// Reads float or double vertex properties in any order; extra properties are
// ignored. Throws kParse, kTruncatedPayload or kUnknownVersion.
GaussianCloud load_cloud(const fs::path& path);

// ---- PNG -------------------------------------------------------------------

struct LoadedImage {
  ImageBuffer rgb;                           // 3 channels (gray is expanded)
  std::optional<std::vector<double>> alpha;  // present for RGBA / gray+alpha files
};

// 8-bit PNG; values are clamped to [0, 1] and rounded. One- and three-channel
// images are written as gray / RGB, or with an alpha channel when given.
void save_image(const fs::path& path, const ImageBuffer& img,
                const std::vector<double>* alpha = nullptr);
LoadedImage load_image(const fs::path& path);

// ---- Dataset directory -----------------------------------------------------
//
//   manifest.json         schema version, orbits, inconsistency, cameras, files
//   scene.ply             the unperturbed truth cloud
//   frames/frame_NNN.png  RGBA pseudo-labels (straight alpha)
//   heldout/view_NNN.png  truth renders on white

void save_dataset(const fs::path& dir, const PseudoDataset& ds,
                  const nlohmann::json& extra = nlohmann::json::object());
PseudoDataset load_dataset(const fs::path& dir);
nlohmann::json read_manifest(const fs::path& dir);

// ---- JSON helpers ----------------------------------------------------------

nlohmann::json camera_to_json(const Camera& c);
Camera camera_from_json(const nlohmann::json& j);
nlohmann::json orbit_to_json(const OrbitSpec& o);
OrbitSpec orbit_from_json(const nlohmann::json& j);
nlohmann::json scene_spec_to_json(const SceneSpec& s);
// Throws kConfig naming the offending field.
SceneSpec scene_spec_from_json(const nlohmann::json& j);
SceneSpec load_scene_spec(const fs::path& path);

nlohmann::json eval_report_to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);
nlohmann::json ab_report_to_json(const AbReport& r);

// ---- Metrics log -----------------------------------------------------------

struct MetricsRecord {
  int iteration = 0;
  double l1_u_model1 = 0.0;
  double l1_u_model2 = 0.0;
  double d_ssim = 0.0;
  double lpips = 0.0;
  double total = 0.0;
  std::vector<std::size_t> points;  // per model
  double resolution_ratio = 1.0;
  std::vector<int> active_orbits;
  double wall_ms = 0.0;

  bool operator==(const MetricsRecord&) const = default;
};

nlohmann::json metrics_to_json(const MetricsRecord& r);
MetricsRecord metrics_from_json(const nlohmann::json& j);

// Appends one JSON object followed by '\n' and flushes.
void append_json_line(const fs::path& path, const nlohmann::json& record);
void append_metrics(const fs::path& path, const MetricsRecord& record);

// A trailing line without '\n' is treated as an interrupted write: it is
// dropped and a warning is logged. A malformed complete line throws kParse
// with its 1-based line number. A missing file reads as empty.
std::vector<nlohmann::json> read_json_lines(const fs::path& path);
// Also enforces strictly increasing iterations.
std::vector<MetricsRecord> read_metrics(const fs::path& path);

// Rewrites the log keeping records with iteration < limit.
void truncate_metrics(const fs::path& path, int limit);

std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, const std::string& text);

}  // namespace dualsplat
