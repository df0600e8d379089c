// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualsplat/train.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "dualsplat/error.hpp"

namespace dualsplat {

namespace {

template <int N>
std::span<double> flat(std::vector<Eigen::Matrix<double, N, 1>>& v) {
  return v.empty() ? std::span<double>() : std::span<double>(v.data()->data(), v.size() * N);
}

template <int N>
std::span<const double> flat(const std::vector<Eigen::Matrix<double, N, 1>>& v) {
  return v.empty() ? std::span<const double>()
                   : std::span<const double>(v.data()->data(), v.size() * N);
}

void require_config(bool ok, const std::string& message) {
  if (!ok) fail(ErrorCode::kConfig, message);
}

int milestone_iteration(double fraction, int total) {
  return static_cast<int>(std::ceil(fraction * total - 1e-9));
}

void push_zero(GaussianCloud& c) {
  c.push_back(Vec3::Zero(), Vec3::Zero(), Vec4::Zero(), Vec3::Zero(), 0.0);
}

}  // namespace

const char* ablation_mode_name(AblationMode mode) {
  switch (mode) {
    case AblationMode::kDual: return "dual";
    case AblationMode::kSingleBaseline: return "single_baseline";
    case AblationMode::kLearnableVariance: return "learnable_variance";
    case AblationMode::kEnsemble: return "ensemble_k";
  }
  return "dual";
}

AblationMode parse_ablation_mode(const std::string& name) {
  if (name == "dual") return AblationMode::kDual;
  if (name == "single_baseline" || name == "baseline") return AblationMode::kSingleBaseline;
  if (name == "learnable_variance" || name == "learnable") return AblationMode::kLearnableVariance;
  if (name == "ensemble_k" || name == "ensemble-k" || name == "ensemble")
    return AblationMode::kEnsemble;
  fail(ErrorCode::kConfig, "unknown ablation mode '" + name + "'");
}

int TrainConfig::model_count() const {
  switch (ablation_mode) {
    case AblationMode::kDual: return 2;
    case AblationMode::kSingleBaseline:
    case AblationMode::kLearnableVariance: return 1;
    case AblationMode::kEnsemble: return ensemble_k;
  }
  return 2;
}

void TrainConfig::validate() const {
  require_config(total_iters >= 1, "total_iters must be >= 1");
  require_config(lambda >= 0 && lambda_s >= 0 && lambda_l >= 0, "loss weights must be >= 0");
  require_config(lambda_s <= 1.0, "lambda_s must be <= 1");
  for (double lr : {lr_position_init, lr_position_final, lr_color, lr_opacity, lr_scale,
                    lr_rotation, lr_variance})
    require_config(lr > 0.0 && std::isfinite(lr), "learning rates must be > 0");
  require_config(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1,
                 "adam betas must lie in [0, 1)");
  require_config(adam_eps > 0, "adam_eps must be > 0");
  require_config(densify_interval >= 1, "densify_interval must be >= 1");
  require_config(opacity_reset_interval >= 1, "opacity_reset_interval must be >= 1");
  require_config(split_scale_divisor > 0, "split_scale_divisor must be > 0");
  require_config(max_points >= 1, "max_points must be >= 1");
  require_config(init_points >= 1, "init_points must be >= 1");
  require_config(init_points <= max_points, "init_points must not exceed max_points");
  require_config(init_radius > 0, "init_radius must be > 0");
  require_config(init_opacity > 0 && init_opacity < 1, "init_opacity must lie in (0, 1)");
  require_config(opacity_reset_value > 0 && opacity_reset_value < 1,
                 "opacity_reset_value must lie in (0, 1)");
  require_config(ablation_mode != AblationMode::kEnsemble || ensemble_k >= 2,
                 "ensemble_k must be >= 2");
  require_config(checkpoint_interval >= 0, "checkpoint_interval must be >= 0");
  require_config(!resolution_milestones.empty() && !elevation_milestones.empty(),
                 "schedules need at least one milestone");
  double prev = -1.0;
  for (const auto& m : resolution_milestones) {
    require_config(m.fraction >= 0 && m.fraction <= 1 && m.fraction > prev,
                   "resolution milestone fractions must lie in [0, 1] and strictly increase");
    require_config(m.ratio > 0 && m.ratio <= 1, "resolution ratios must lie in (0, 1]");
    prev = m.fraction;
  }
  require_config(resolution_milestones.front().fraction == 0.0,
                 "the first resolution milestone must start at fraction 0");
  prev = -1.0;
  for (const auto& m : elevation_milestones) {
    require_config(m.fraction >= 0 && m.fraction <= 1 && m.fraction > prev,
                   "elevation milestone fractions must lie in [0, 1] and strictly increase");
    require_config(!m.orbits.empty(), "elevation milestones need at least one orbit");
    prev = m.fraction;
  }
  require_config(elevation_milestones.front().fraction == 0.0,
                 "the first elevation milestone must start at fraction 0");
}

void AdamMoments::reset(std::size_t n, bool with_variance) {
  m = GaussianCloud();
  v = GaussianCloud();
  m.reserve(n);
  v.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    push_zero(m);
    push_zero(v);
  }
  variance_m.assign(with_variance ? n : 0, 0.0);
  variance_v.assign(with_variance ? n : 0, 0.0);
}

void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
               std::span<double> v, double lr, const AdamHyper& h, std::int64_t step) {
  require(params.size() == grads.size() && params.size() == m.size() && params.size() == v.size(),
          "adam_step: shape mismatch");
  require(step >= 1, "adam_step: step must be >= 1");
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * grads[i];
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * grads[i] * grads[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + h.eps);
  }
}

GaussianCloud random_init_cloud(int points, double radius, double opacity, double color,
                                std::uint64_t seed) {
  require(points >= 1, "init_points must be >= 1");
  Rng rng(seed);
  std::vector<Vec3> pos;
  pos.reserve(points);
  while (static_cast<int>(pos.size()) < points) {
    const Vec3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (p.squaredNorm() <= 1.0) pos.push_back(radius * p);
  }
  GaussianCloud cloud;
  cloud.reserve(points);
  for (int i = 0; i < points; ++i) {
    // Three smallest squared distances.
    double best[3] = {INFINITY, INFINITY, INFINITY};
    for (int j = 0; j < points; ++j) {
      if (j == i) continue;
      const double d = (pos[i] - pos[j]).squaredNorm();
      if (d < best[2]) {
        best[2] = d;
        if (best[2] < best[1]) std::swap(best[2], best[1]);
        if (best[1] < best[0]) std::swap(best[1], best[0]);
      }
    }
    int found = 0;
    double sum = 0.0;
    for (double b : best) {
      if (std::isfinite(b)) {
        sum += b;
        ++found;
      }
    }
    const double mean_sq = found ? std::max(sum / found, 1e-7) : radius * radius;
    cloud.push_back(pos[i], Vec3::Constant(std::log(std::sqrt(mean_sq))), Vec4(1, 0, 0, 0),
                    Vec3::Constant(color), logit(opacity));
  }
  return cloud;
}

TrainerState init_models(const TrainConfig& config) {
  config.validate();
  TrainerState state;
  const int count = config.model_count();
  const bool variance = config.ablation_mode == AblationMode::kLearnableVariance;
  for (int m = 0; m < count; ++m) {
    const std::uint64_t seed =
        m == 0 ? config.seed1 : (m == 1 ? config.seed2 : mix_seed(config.seed2, m));
    ModelState model;
    model.cloud = random_init_cloud(config.init_points, config.init_radius, config.init_opacity,
                                    config.init_color, seed);
    model.moments.reset(model.size(), variance);
    if (variance) model.log_variance.assign(model.size(), config.init_log_variance);
    model.grad_accum.assign(model.size(), 0.0);
    model.grad_count.assign(model.size(), 0);
    model.densify_rng = Rng(mix_seed(seed, 0xd5));
    state.models.push_back(std::move(model));
  }
  state.view_rng = Rng(mix_seed(config.sample_seed, 1));
  state.background_rng = Rng(mix_seed(config.sample_seed, 2));
  state.scene_extent = config.scene_extent;
  return state;
}

double scene_extent_from_cameras(std::span<const Camera> cameras) {
  require(!cameras.empty(), "scene_extent_from_cameras: no cameras");
  Vec3 centroid = Vec3::Zero();
  for (const auto& c : cameras) centroid += c.center();
  centroid /= static_cast<double>(cameras.size());
  double dist = 0.0;
  for (const auto& c : cameras) dist = std::max(dist, (c.center() - centroid).norm());
  return 1.1 * dist;
}

double resolution_schedule(int iter, int total, std::span<const ResolutionMilestone> milestones) {
  require(total >= 1 && iter >= 0, "resolution_schedule: invalid iteration");
  require(!milestones.empty(), "resolution_schedule: no milestones");
  double ratio = milestones.front().ratio;
  for (const auto& m : milestones)
    if (iter >= milestone_iteration(m.fraction, total)) ratio = m.ratio;
  return ratio;
}

std::vector<int> elevation_schedule(int iter, int total,
                                    std::span<const ElevationMilestone> milestones) {
  require(total >= 1 && iter >= 0, "elevation_schedule: invalid iteration");
  require(!milestones.empty(), "elevation_schedule: no milestones");
  std::vector<int> orbits = milestones.front().orbits;
  for (const auto& m : milestones)
    if (iter >= milestone_iteration(m.fraction, total)) orbits = m.orbits;
  std::sort(orbits.begin(), orbits.end());
  return orbits;
}

double training_ratio(double scheduled, int width, int height) {
  const double w = kSsimWindow;
  const double floor_ratio = std::max(w / width, w / height);
  return std::min(1.0, std::max(scheduled, floor_ratio));
}

Vec3 sample_background(Rng& rng, bool random_background) {
  if (!random_background) return Vec3::Ones();
  const double r = rng.uniform();
  const double g = rng.uniform();
  const double b = rng.uniform();
  return {r, g, b};
}

double position_learning_rate(const TrainConfig& config, int iter) {
  const double t = std::clamp(static_cast<double>(iter) / config.total_iters, 0.0, 1.0);
  return std::exp(std::log(config.lr_position_init) * (1.0 - t) +
                  std::log(config.lr_position_final) * t);
}

namespace {

void apply_adam(ModelState& model, const ParamGradients& g, const TrainConfig& cfg, double lr_pos,
                std::int64_t step) {
  const AdamHyper h{cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  GaussianCloud& c = model.cloud;
  GaussianCloud& m = model.moments.m;
  GaussianCloud& v = model.moments.v;
  adam_step(flat(c.positions), flat(g.positions), flat(m.positions), flat(v.positions), lr_pos, h,
            step);
  adam_step(flat(c.colors_dc), flat(g.colors_dc), flat(m.colors_dc), flat(v.colors_dc),
            cfg.lr_color, h, step);
  adam_step(c.opacity_logits, g.opacity_logits, m.opacity_logits, v.opacity_logits, cfg.lr_opacity,
            h, step);
  adam_step(flat(c.log_scales), flat(g.log_scales), flat(m.log_scales), flat(v.log_scales),
            cfg.lr_scale, h, step);
  adam_step(flat(c.rotations), flat(g.rotations), flat(m.rotations), flat(v.rotations),
            cfg.lr_rotation, h, step);
}

void accumulate_stats(ModelState& model, const RenderOutput& out, const ParamGradients& g) {
  const double sx = 0.5 * out.camera.width;
  const double sy = 0.5 * out.camera.height;
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (!out.projected[i].visible) continue;
    model.grad_accum[i] += std::hypot(g.mean_2d[i].x() * sx, g.mean_2d[i].y() * sy);
    model.grad_count[i] += 1;
  }
}

GaussianCloud variance_payload(const GaussianCloud& cloud, const std::vector<double>& log_var) {
  GaussianCloud payload = cloud;
  for (std::size_t i = 0; i < payload.size(); ++i)
    payload.colors_dc[i] = Vec3::Constant(std::exp(log_var[i]));
  return payload;
}

}  // namespace

StepResult train_step(TrainerState& state, const PseudoDataset& dataset, const TrainConfig& config) {
  require(!dataset.frames.empty(), "train_step: dataset is empty");
  require(!state.models.empty(), "train_step: trainer has no models");
  const int it = state.iteration;
  const int total = config.total_iters;

  StepResult result;
  result.ratio = resolution_schedule(std::min(it, total - 1), total, config.resolution_milestones);
  result.active_orbits = elevation_schedule(std::min(it, total - 1), total, config.elevation_milestones);
  std::vector<std::size_t> active;
  for (std::size_t f = 0; f < dataset.frames.size(); ++f)
    if (std::binary_search(result.active_orbits.begin(), result.active_orbits.end(),
                           dataset.frames[f].orbit))
      active.push_back(f);
  if (active.empty())
    fail(ErrorCode::kSchedule, "no training views in the active orbit set at iteration " +
                                   std::to_string(it));

  if (!(state.scene_extent > 0.0)) {
    std::vector<Camera> cams;
    for (const auto& f : dataset.frames) cams.push_back(f.camera);
    state.scene_extent = scene_extent_from_cameras(cams);
  }

  result.view = active[state.view_rng.uniform_index(active.size())];
  result.background = sample_background(state.background_rng, config.random_background);
  const Frame& frame = dataset.frames[result.view];
  result.ratio = training_ratio(result.ratio, frame.camera.width, frame.camera.height);
  const Camera cam = frame.camera.scaled(result.ratio);
  const ImageBuffer label =
      resample_area(frame_on_background(frame, result.background), cam.width, cam.height);

  const std::size_t k = state.models.size();
  std::vector<RenderOutput> renders;
  renders.reserve(k);
  for (const auto& model : state.models)
    renders.push_back(render(model.cloud, cam, result.background));

  LossWeights weights{config.lambda, config.lambda_s, config.lambda_l,
                      config.detach_uncertainty_weight};
  std::vector<ImageBuffer> image_grads;
  std::vector<double> variance_grads;

  switch (config.ablation_mode) {
    case AblationMode::kDual: {
      require(k == 2, "dual mode needs two models");
      TotalLossResult r = total_loss(label, renders[0].image, renders[1].image, weights);
      result.loss = r.breakdown;
      result.uncertainty = std::move(r.uncertainty);
      image_grads.push_back(std::move(r.grad_pred1));
      image_grads.push_back(std::move(r.grad_pred2));
      break;
    }
    case AblationMode::kSingleBaseline: {
      const UncertaintyMap zero(cam.width, cam.height, 3);
      SingleLossResult r = single_model_loss(label, renders[0].image, zero, weights);
      result.loss = r.breakdown;
      result.uncertainty = zero;
      image_grads.push_back(std::move(r.grad_pred));
      break;
    }
    case AblationMode::kLearnableVariance: {
      ModelState& model = state.models[0];
      const RenderOutput u_render =
          render(variance_payload(model.cloud, model.log_variance), cam, Vec3::Zero());
      SingleLossResult r = single_model_loss(label, renders[0].image, u_render.image, weights);
      result.loss = r.breakdown;
      result.uncertainty = u_render.image;
      image_grads.push_back(std::move(r.grad_pred));
      const auto color_grads = render_backward_colors(u_render, r.grad_u, model.size());
      variance_grads.resize(model.size());
      for (std::size_t i = 0; i < model.size(); ++i)
        variance_grads[i] = color_grads[i].sum() * std::exp(model.log_variance[i]);
      break;
    }
    case AblationMode::kEnsemble: {
      std::vector<ImageBuffer> preds;
      for (const auto& r : renders) preds.push_back(r.image);
      EnsembleLossResult r = ensemble_loss(label, preds, weights);
      result.loss.l1_u_model1 = r.l1_u[0];
      result.loss.l1_u_model2 = r.l1_u[1];
      result.loss.d_ssim = r.d_ssim;
      result.loss.lpips = r.lpips;
      result.loss.total = r.total;
      result.uncertainty = std::move(r.uncertainty);
      image_grads = std::move(r.grads);
      break;
    }
  }

  state.adam_step += 1;
  const double lr_pos = position_learning_rate(config, it);
  for (std::size_t m = 0; m < k; ++m) {
    ModelState& model = state.models[m];
    const ParamGradients g = render_backward(model.cloud, renders[m], image_grads[m]);
    accumulate_stats(model, renders[m], g);
    apply_adam(model, g, config, lr_pos, state.adam_step);
    if (!variance_grads.empty() && m == 0) {
      adam_step(model.log_variance, variance_grads, model.moments.variance_m,
                model.moments.variance_v, config.lr_variance,
                {config.adam_beta1, config.adam_beta2, config.adam_eps}, state.adam_step);
    }
  }
  state.iteration += 1;

  const int done = state.iteration;
  const int stop = config.effective_densify_stop();
  if (done >= config.densify_start && done <= stop && done % config.densify_interval == 0) {
    for (auto& model : state.models) densify_and_prune(model, config, state.scene_extent);
    result.densified = true;
  }
  if (done < stop && done % config.opacity_reset_interval == 0) {
    for (auto& model : state.models) reset_opacity(model, config);
  }
  return result;
}

void densify_and_prune(ModelState& model, const TrainConfig& config, double scene_extent) {
  const std::size_t n = model.size();
  const bool variance = !model.log_variance.empty();
  const double small_limit = config.percent_dense * scene_extent;
  const double shrink = std::log(config.split_scale_divisor);
  long budget = static_cast<long>(config.max_points) - static_cast<long>(n);

  std::vector<bool> split(n, false);
  GaussianCloud fresh;
  std::vector<double> fresh_variance;
  for (std::size_t i = 0; i < n; ++i) {
    const double avg = model.grad_count[i] ? model.grad_accum[i] / model.grad_count[i] : 0.0;
    if (!(avg >= config.densify_grad_threshold) || budget < 1) continue;
    const GaussianCloud& c = model.cloud;
    const double max_scale = std::exp(c.log_scales[i].maxCoeff());
    if (max_scale <= small_limit) {
      fresh.append_from(c, i);
      if (variance) fresh_variance.push_back(model.log_variance[i]);
      budget -= 1;
    } else {
      split[i] = true;
      const Mat3 rot = quat_to_rotation(c.rotations[i]);
      const Vec3 s = c.log_scales[i].array().exp();
      for (int child = 0; child < 2; ++child) {
        Rng& rng = model.densify_rng;
        const Vec3 offset(rng.normal() * s.x(), rng.normal() * s.y(), rng.normal() * s.z());
        fresh.push_back(c.positions[i] + rot * offset, c.log_scales[i].array() - shrink,
                        c.rotations[i], c.colors_dc[i], c.opacity_logits[i]);
        if (variance) fresh_variance.push_back(model.log_variance[i]);
      }
      budget -= 1;
    }
  }

  // Survivors: unsplit originals then new points, minus low-opacity ones.
  const double min_logit = logit(config.prune_opacity_threshold);
  auto keep_point = [&](double opacity_logit) { return opacity_logit >= min_logit; };
  std::size_t survivors = 0;
  for (std::size_t i = 0; i < n; ++i) survivors += !split[i] && keep_point(model.cloud.opacity_logits[i]);
  for (std::size_t j = 0; j < fresh.size(); ++j) survivors += keep_point(fresh.opacity_logits[j]);

  // Never prune to an empty cloud: fall back to the single most opaque point.
  std::size_t fallback = n;
  if (survivors == 0 && n > 0) {
    fallback = static_cast<std::size_t>(
        std::max_element(model.cloud.opacity_logits.begin(), model.cloud.opacity_logits.end()) -
        model.cloud.opacity_logits.begin());
  }

  ModelState out;
  out.densify_rng = model.densify_rng;
  out.cloud.reserve(survivors + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const bool keep = (!split[i] && keep_point(model.cloud.opacity_logits[i])) || i == fallback;
    if (!keep) continue;
    out.cloud.append_from(model.cloud, i);
    out.moments.m.append_from(model.moments.m, i);
    out.moments.v.append_from(model.moments.v, i);
    if (variance) {
      out.log_variance.push_back(model.log_variance[i]);
      out.moments.variance_m.push_back(model.moments.variance_m[i]);
      out.moments.variance_v.push_back(model.moments.variance_v[i]);
    }
  }
  if (fallback == n) {
    for (std::size_t j = 0; j < fresh.size(); ++j) {
      if (!keep_point(fresh.opacity_logits[j])) continue;
      out.cloud.append_from(fresh, j);
      push_zero(out.moments.m);
      push_zero(out.moments.v);
      if (variance) {
        out.log_variance.push_back(fresh_variance[j]);
        out.moments.variance_m.push_back(0.0);
        out.moments.variance_v.push_back(0.0);
      }
    }
  }
  out.grad_accum.assign(out.size(), 0.0);
  out.grad_count.assign(out.size(), 0);
  model = std::move(out);
}

void reset_opacity(ModelState& model, const TrainConfig& config) {
  const double cap = logit(config.opacity_reset_value);
  for (std::size_t i = 0; i < model.size(); ++i) {
    model.cloud.opacity_logits[i] = std::min(model.cloud.opacity_logits[i], cap);
    model.moments.m.opacity_logits[i] = 0.0;
    model.moments.v.opacity_logits[i] = 0.0;
  }
}

std::size_t select_output_model(const TrainerState& state, const PseudoDataset& dataset) {
  require(!state.models.empty(), "select_output_model: no models");
  std::size_t best = 0;
  double best_l1 = INFINITY;
  for (std::size_t m = 0; m < state.models.size(); ++m) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& frame : dataset.frames) {
      const ImageBuffer pred = render(state.models[m].cloud, frame.camera, Vec3::Ones()).image;
      const ImageBuffer gt = frame_on_background(frame, Vec3::Ones());
      for (std::size_t i = 0; i < gt.size(); ++i) sum += std::abs(gt.data[i] - pred.data[i]);
      count += gt.size();
    }
    const double l1 = count ? sum / static_cast<double>(count) : 0.0;
    if (l1 < best_l1) {
      best_l1 = l1;
      best = m;
    }
  }
  return best;
}

}  // namespace dualsplat
