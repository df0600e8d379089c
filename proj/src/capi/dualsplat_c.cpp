// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualsplat/dualsplat.h"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "dualsplat/config.hpp"
#include "dualsplat/data.hpp"
#include "dualsplat/error.hpp"
#include "dualsplat/io.hpp"
#include "dualsplat/metrics.hpp"
#include "dualsplat/parallel.hpp"
#include "dualsplat/render.hpp"
#include "dualsplat/run.hpp"
#include "dualsplat/train.hpp"

namespace ds = dualsplat;

struct ds_cloud {
  ds::GaussianCloud cloud;
};
struct ds_image {
  ds::ImageBuffer image;
};
struct ds_config {
  ds::TrainConfig config;
};
struct ds_dataset {
  ds::PseudoDataset dataset;
};
struct ds_trainer {
  ds::TrainConfig config;
  ds::PseudoDataset dataset;
  ds::TrainerState state;
};

namespace {

thread_local std::string g_last_error;

ds_status to_status(ds::ErrorCode code) {
  switch (code) {
    case ds::ErrorCode::kContractViolation: return DS_ERR_INVALID_ARGUMENT;
    case ds::ErrorCode::kDegenerateRotation: return DS_ERR_DEGENERATE_ROTATION;
    case ds::ErrorCode::kParse: return DS_ERR_PARSE;
    case ds::ErrorCode::kTruncatedPayload: return DS_ERR_TRUNCATED_PAYLOAD;
    case ds::ErrorCode::kUnknownVersion: return DS_ERR_UNKNOWN_VERSION;
    case ds::ErrorCode::kIntegrity: return DS_ERR_INTEGRITY;
    case ds::ErrorCode::kIo: return DS_ERR_IO;
    case ds::ErrorCode::kConfig: return DS_ERR_CONFIG;
    case ds::ErrorCode::kSchedule: return DS_ERR_SCHEDULE;
  }
  return DS_ERR_INTERNAL;
}

template <typename F>
ds_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return DS_OK;
  } catch (const ds::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return DS_ERR_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return DS_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  ds::require(p != nullptr, std::string(what) + " must not be null");
}

ds::Camera to_camera(const ds_camera& c) {
  ds::Camera cam;
  cam.azimuth = c.azimuth;
  cam.elevation = c.elevation;
  cam.radius = c.radius;
  cam.fov_y = c.fov_y;
  cam.width = c.width;
  cam.height = c.height;
  cam.validate();
  return cam;
}

ds_camera from_camera(const ds::Camera& c) {
  return {c.azimuth, c.elevation, c.radius, c.fov_y, c.width, c.height};
}

ds_step_info to_info(int iteration, const ds::StepResult& s) {
  ds_step_info info{};
  info.iteration = iteration;
  info.l1_u_model1 = s.loss.l1_u_model1;
  info.l1_u_model2 = s.loss.l1_u_model2;
  info.d_ssim = s.loss.d_ssim;
  info.lpips = s.loss.lpips;
  info.total = s.loss.total;
  info.resolution_ratio = s.ratio;
  info.view = s.view;
  return info;
}

ds::EvalReport read_run_report(const std::string& run_dir) {
  const auto lines = ds::read_json_lines(std::filesystem::path(run_dir) / "eval.jsonl");
  if (lines.empty())
    ds::fail(ds::ErrorCode::kIo, run_dir + ": eval.jsonl is missing or empty");
  return ds::eval_report_from_json(lines.back());
}

}  // namespace

extern "C" {

const char* ds_status_string(ds_status status) {
  switch (status) {
    case DS_OK: return "ok";
    case DS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case DS_ERR_DEGENERATE_ROTATION: return "degenerate rotation";
    case DS_ERR_PARSE: return "parse error";
    case DS_ERR_TRUNCATED_PAYLOAD: return "truncated payload";
    case DS_ERR_UNKNOWN_VERSION: return "unknown version";
    case DS_ERR_INTEGRITY: return "integrity error";
    case DS_ERR_IO: return "i/o error";
    case DS_ERR_CONFIG: return "configuration error";
    case DS_ERR_SCHEDULE: return "schedule error";
    case DS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* ds_last_error(void) { return g_last_error.c_str(); }

const char* ds_version(void) { return "0.1.0"; }

void ds_set_threads(int threads) { ds::set_worker_count(threads > 0 ? threads : 0); }

ds_camera ds_camera_default(void) { return from_camera(ds::Camera{}); }

ds_status ds_orbit_camera(const ds_camera* base, int n, int k, double amplitude, ds_camera* out) {
  return guarded([&] {
    need(base, "base");
    need(out, "out");
    ds::require(n >= 1 && k >= 0 && k < n, "orbit camera index out of range");
    ds::OrbitSpec spec;
    spec.frames_per_orbit = n;
    spec.elevation_amplitude = amplitude;
    spec.radius = base->radius;
    spec.fov_y = base->fov_y;
    spec.width = base->width;
    spec.height = base->height;
    *out = from_camera(ds::orbit_cameras(spec)[k]);
  });
}

ds_status ds_cloud_load(const char* ply_path, ds_cloud** out) {
  return guarded([&] {
    need(ply_path, "path");
    need(out, "out");
    *out = new ds_cloud{ds::load_cloud(ply_path)};
  });
}

ds_status ds_cloud_save(const ds_cloud* cloud, const char* ply_path) {
  return guarded([&] {
    need(cloud, "cloud");
    need(ply_path, "path");
    ds::save_cloud(ply_path, cloud->cloud);
  });
}

size_t ds_cloud_size(const ds_cloud* cloud) { return cloud ? cloud->cloud.size() : 0; }

void ds_cloud_free(ds_cloud* cloud) { delete cloud; }

ds_status ds_render(const ds_cloud* cloud, const ds_camera* camera, const double background[3],
                    ds_image** out) {
  return guarded([&] {
    need(cloud, "cloud");
    need(camera, "camera");
    need(out, "out");
    const ds::Vec3 bg = background ? ds::Vec3(background[0], background[1], background[2])
                                   : ds::Vec3::Ones();
    *out = new ds_image{ds::render(cloud->cloud, to_camera(*camera), bg).image};
  });
}

int ds_image_width(const ds_image* image) { return image ? image->image.width : 0; }
int ds_image_height(const ds_image* image) { return image ? image->image.height : 0; }
int ds_image_channels(const ds_image* image) { return image ? image->image.channels : 0; }
const double* ds_image_data(const ds_image* image) {
  return image ? image->image.data.data() : nullptr;
}

ds_status ds_image_save_png(const ds_image* image, const char* path) {
  return guarded([&] {
    need(image, "image");
    need(path, "path");
    ds::save_image(path, image->image);
  });
}

void ds_image_free(ds_image* image) { delete image; }

ds_status ds_config_create(ds_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new ds_config{};
  });
}

ds_status ds_config_load(ds_config* config, const char* path) {
  return guarded([&] {
    need(config, "config");
    need(path, "path");
    config->config = ds::load_config(path, config->config);
  });
}

ds_status ds_config_set(ds_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    ds::set_config_value(config->config, key, value);
  });
}

ds_status ds_config_get(const ds_config* config, const char* key, char* buffer,
                        size_t buffer_size, size_t* required) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    const std::string value = ds::get_config_value(config->config, key);
    if (required) *required = value.size() + 1;
    ds::require(buffer != nullptr && buffer_size > value.size(),
                "buffer too small for config value");
    std::memcpy(buffer, value.c_str(), value.size() + 1);
  });
}

ds_status ds_config_validate(const ds_config* config) {
  return guarded([&] {
    need(config, "config");
    config->config.validate();
  });
}

ds_status ds_config_save(const ds_config* config, const char* path) {
  return guarded([&] {
    need(config, "config");
    need(path, "path");
    ds::save_config(path, config->config);
  });
}

size_t ds_config_key_count(void) { return ds::config_keys().size(); }

const char* ds_config_key(size_t index) {
  const auto& keys = ds::config_keys();
  return index < keys.size() ? keys[index].c_str() : nullptr;
}

void ds_config_free(ds_config* config) { delete config; }

ds_dataset_options ds_dataset_options_default(void) {
  ds_dataset_options o{};
  o.scene_spec_path = nullptr;
  o.geometry_jitter = 0.0;
  o.color_jitter = 0.0;
  o.seed = 0;
  o.width = 64;
  o.height = 64;
  o.frames_per_orbit = 21;
  o.heldout_views = 36;
  return o;
}

ds_status ds_dataset_generate(const ds_dataset_options* options, const char* out_dir) {
  return guarded([&] {
    need(options, "options");
    need(out_dir, "out_dir");
    const ds::SceneSpec spec = options->scene_spec_path
                                   ? ds::load_scene_spec(options->scene_spec_path)
                                   : ds::default_scene_spec();
    ds::InconsistencySpec inc;
    inc.geometry_jitter = options->geometry_jitter;
    inc.color_jitter = options->color_jitter;
    inc.seed = ds::mix_seed(options->seed, 1);
    try {
      inc.validate();
    } catch (const ds::Error& e) {
      ds::fail(ds::ErrorCode::kConfig, e.what());
    }
    ds::require(options->heldout_views >= 0, "heldout_views must be >= 0");
    const auto orbits =
        ds::default_orbits(options->width, options->height, options->frames_per_orbit);
    const ds::GaussianCloud scene = ds::make_scene(spec, ds::mix_seed(options->seed, 0));
    const ds::PseudoDataset dataset =
        ds::render_pseudo_labels(scene, orbits, inc, options->heldout_views);
    ds::save_dataset(out_dir, dataset,
                     {{"seed", options->seed}, {"scene_spec", ds::scene_spec_to_json(spec)}});
  });
}

ds_status ds_dataset_load(const char* dir, ds_dataset** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new ds_dataset{ds::load_dataset(dir)};
  });
}

size_t ds_dataset_frame_count(const ds_dataset* dataset) {
  return dataset ? dataset->dataset.frames.size() : 0;
}

ds_status ds_dataset_camera(const ds_dataset* dataset, size_t frame, ds_camera* out) {
  return guarded([&] {
    need(dataset, "dataset");
    need(out, "out");
    ds::require(frame < dataset->dataset.frames.size(), "frame index out of range");
    *out = from_camera(dataset->dataset.frames[frame].camera);
  });
}

int ds_dataset_frame_orbit(const ds_dataset* dataset, size_t frame) {
  if (!dataset || frame >= dataset->dataset.frames.size()) return -1;
  return dataset->dataset.frames[frame].orbit;
}

int ds_dataset_consistent(const ds_dataset* dataset) {
  return dataset && dataset->dataset.inconsistency.consistent() ? 1 : 0;
}

size_t ds_dataset_heldout_count(const ds_dataset* dataset) {
  return dataset ? dataset->dataset.heldout.size() : 0;
}

ds_status ds_dataset_truth(const ds_dataset* dataset, ds_cloud** out) {
  return guarded([&] {
    need(dataset, "dataset");
    need(out, "out");
    *out = new ds_cloud{dataset->dataset.scene};
  });
}

void ds_dataset_free(ds_dataset* dataset) { delete dataset; }

ds_status ds_trainer_create(const ds_config* config, const ds_dataset* dataset, ds_trainer** out) {
  return guarded([&] {
    need(config, "config");
    need(dataset, "dataset");
    need(out, "out");
    auto trainer = std::make_unique<ds_trainer>();
    trainer->config = config->config;
    trainer->dataset = dataset->dataset;
    trainer->state = ds::init_models(trainer->config);
    *out = trainer.release();
  });
}

ds_status ds_trainer_step(ds_trainer* trainer, ds_step_info* info) {
  return guarded([&] {
    need(trainer, "trainer");
    const int it = trainer->state.iteration;
    const ds::StepResult r = ds::train_step(trainer->state, trainer->dataset, trainer->config);
    if (info) *info = to_info(it, r);
  });
}

int ds_trainer_iteration(const ds_trainer* trainer) {
  return trainer ? trainer->state.iteration : 0;
}

size_t ds_trainer_model_count(const ds_trainer* trainer) {
  return trainer ? trainer->state.models.size() : 0;
}

ds_status ds_trainer_model(const ds_trainer* trainer, size_t index, ds_cloud** out) {
  return guarded([&] {
    need(trainer, "trainer");
    need(out, "out");
    ds::require(index < trainer->state.models.size(), "model index out of range");
    *out = new ds_cloud{trainer->state.models[index].cloud};
  });
}

void ds_trainer_free(ds_trainer* trainer) { delete trainer; }

ds_status ds_train(const ds_config* config, const char* data_dir, const char* run_dir, int resume,
                   ds_progress_fn progress, void* user, int* completed) {
  return guarded([&] {
    need(config, "config");
    need(data_dir, "data_dir");
    need(run_dir, "run_dir");
    ds::RunOptions options;
    options.config = config->config;
    options.data_dir = data_dir;
    options.run_dir = run_dir;
    options.resume = resume != 0;
    if (progress) {
      options.progress = [progress, user](int it, const ds::StepResult& step) {
        const ds_step_info info = to_info(it, step);
        return progress(&info, user) == 0;
      };
    }
    const ds::RunSummary summary = ds::run_training(options);
    if (completed) *completed = summary.completed ? 1 : 0;
  });
}

ds_status ds_evaluate(const ds_cloud* model, const char* data_dir, const char* report_path,
                      ds_eval_summary* out) {
  return guarded([&] {
    need(model, "model");
    need(data_dir, "data_dir");
    const ds::PseudoDataset dataset = ds::load_dataset(data_dir);
    ds::require(!dataset.heldout.empty(), "dataset has no held-out views");
    ds::EvalReport report = ds::evaluate(model->cloud, dataset.scene, dataset.heldout);
    report.dataset_fingerprint = ds::fingerprint(ds::read_manifest(data_dir).dump());
    if (report_path) {
      std::filesystem::remove(report_path);
      ds::append_json_line(report_path, ds::eval_report_to_json(report));
    }
    if (out) {
      *out = {report.psnr.size(), report.psnr_mean, report.psnr_std, report.ssim_mean,
              report.ssim_std};
    }
  });
}

ds_status ds_ab_compare(const char* const* runs_a, const char* const* runs_b, size_t count,
                        const char* report_path, ds_ab_summary* out) {
  return guarded([&] {
    need(runs_a, "runs_a");
    need(runs_b, "runs_b");
    ds::require(count >= 1, "at least one run pair is required");
    std::vector<ds::EvalReport> a, b;
    for (size_t i = 0; i < count; ++i) {
      need(runs_a[i], "run path");
      need(runs_b[i], "run path");
      a.push_back(read_run_report(runs_a[i]));
      b.push_back(read_run_report(runs_b[i]));
    }
    const ds::AbReport r = ds::ab_report(a, b);
    if (report_path) {
      std::filesystem::remove(report_path);
      ds::append_json_line(report_path, ds::ab_report_to_json(r));
    }
    if (out) {
      out->pairs = r.psnr_delta.size();
      out->psnr_delta_mean = r.psnr_delta_mean;
      out->ssim_delta_mean = r.ssim_delta_mean;
      out->psnr_wins = r.psnr_wins;
      out->psnr_losses = r.psnr_losses;
      out->ssim_wins = r.ssim_wins;
      out->ssim_losses = r.ssim_losses;
      out->psnr_p_value = r.psnr_p_value;
      out->ssim_p_value = r.ssim_p_value;
    }
  });
}

ds_status ds_uncertainty_viz(const char* run_dir, int iteration, int view, const char* out_png) {
  return guarded([&] {
    need(run_dir, "run_dir");
    need(out_png, "out_png");
    ds::uncertainty_viz(run_dir, iteration, view, out_png);
  });
}

}  // extern "C"
