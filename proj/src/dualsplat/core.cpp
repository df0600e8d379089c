// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualsplat/core.hpp"

#include <Eigen/LU>
#include <cmath>
#include <numbers>

#include "dualsplat/error.hpp"

namespace dualsplat {

namespace {
double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

bool finite(const auto& v) { return v.allFinite(); }
}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

void GaussianCloud::resize(std::size_t n) {
  positions.resize(n, Vec3::Zero());
  log_scales.resize(n, Vec3::Zero());
  rotations.resize(n, Vec4(1, 0, 0, 0));
  colors_dc.resize(n, Vec3::Constant(0.5));
  opacity_logits.resize(n, 0.0);
}

void GaussianCloud::reserve(std::size_t n) {
  positions.reserve(n);
  log_scales.reserve(n);
  rotations.reserve(n);
  colors_dc.reserve(n);
  opacity_logits.reserve(n);
}

void GaussianCloud::push_back(const Vec3& position, const Vec3& log_scale, const Vec4& rotation,
                              const Vec3& color, double opacity_logit) {
  positions.push_back(position);
  log_scales.push_back(log_scale);
  rotations.push_back(rotation);
  colors_dc.push_back(color);
  opacity_logits.push_back(opacity_logit);
}

void GaussianCloud::append_from(const GaussianCloud& other, std::size_t index) {
  push_back(other.positions[index], other.log_scales[index], other.rotations[index],
            other.colors_dc[index], other.opacity_logits[index]);
}

void GaussianCloud::filter(const std::vector<bool>& keep) {
  require(keep.size() == size(), "filter mask length mismatch");
  std::size_t out = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    if (!keep[i]) continue;
    positions[out] = positions[i];
    log_scales[out] = log_scales[i];
    rotations[out] = rotations[i];
    colors_dc[out] = colors_dc[i];
    opacity_logits[out] = opacity_logits[i];
    ++out;
  }
  resize(out);
}

void GaussianCloud::validate() const {
  const std::size_t n = positions.size();
  require(log_scales.size() == n && rotations.size() == n && colors_dc.size() == n &&
              opacity_logits.size() == n,
          "GaussianCloud arrays have mismatched lengths");
  for (std::size_t i = 0; i < n; ++i) {
    require(finite(positions[i]) && finite(log_scales[i]) && finite(rotations[i]) &&
                finite(colors_dc[i]) && std::isfinite(opacity_logits[i]),
            "GaussianCloud point " + std::to_string(i) + " has a non-finite parameter");
    require(log_scales[i].array().exp().allFinite(),
            "GaussianCloud point " + std::to_string(i) + " has an overflowing scale");
  }
}

bool GaussianCloud::operator==(const GaussianCloud& other) const {
  return positions == other.positions && log_scales == other.log_scales &&
         rotations == other.rotations && colors_dc == other.colors_dc &&
         opacity_logits == other.opacity_logits;
}

void Camera::validate() const {
  require(fov_y > 0.0 && fov_y < 180.0, "camera fov_y must lie in (0, 180) degrees");
  require(width >= 1 && height >= 1, "camera width and height must be >= 1");
  require(radius > 0.0 && std::isfinite(radius), "camera radius must be positive");
  require(std::isfinite(azimuth) && std::isfinite(elevation), "camera angles must be finite");
}

Camera Camera::scaled(double ratio) const {
  require(ratio > 0.0 && ratio <= 1.0, "render ratio must lie in (0, 1]");
  Camera out = *this;
  out.width = std::max(1, static_cast<int>(std::lround(ratio * width)));
  out.height = std::max(1, static_cast<int>(std::lround(ratio * height)));
  return out;
}

Vec3 Camera::center() const {
  const double a = deg2rad(azimuth);
  const double e = deg2rad(elevation);
  return radius * Vec3(std::cos(e) * std::sin(a), -std::cos(e) * std::cos(a), std::sin(e));
}

Mat3 quat_to_rotation(const Vec4& q) {
  const double norm = q.norm();
  if (!(norm > 1e-12)) fail(ErrorCode::kDegenerateRotation, "quaternion norm is ~0");
  const Vec4 u = q / norm;
  const double w = u[0], x = u[1], y = u[2], z = u[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Mat3 covariance_3d(const Vec3& log_scale, const Vec4& q) {
  const Mat3 m = quat_to_rotation(q) * log_scale.array().exp().matrix().asDiagonal();
  return m * m.transpose();
}

CameraMatrices camera_matrices(const Camera& cam) {
  const double a = deg2rad(cam.azimuth);
  const Vec3 center = cam.center();
  const Vec3 forward = -center.normalized();
  // The horizontal right vector depends only on azimuth, so the poles are not
  // a special case.
  const Vec3 right(std::cos(a), std::sin(a), 0.0);
  const Vec3 down = forward.cross(right);

  CameraMatrices out;
  Mat3 rot;
  rot.row(0) = right.transpose();
  rot.row(1) = down.transpose();
  rot.row(2) = forward.transpose();
  out.world_to_camera.topLeftCorner<3, 3>() = rot;
  out.world_to_camera.topRightCorner<3, 1>() = -rot * center;

  const double focal = cam.height / (2.0 * std::tan(deg2rad(cam.fov_y) / 2.0));
  out.intrinsics = {focal, focal, cam.width / 2.0, cam.height / 2.0};
  return out;
}

std::optional<Projection> project_gaussian(const Vec3& mean, const Mat3& cov_3d,
                                           const CameraMatrices& cam, double dilation) {
  const Mat3 w = cam.rotation();
  const Vec3 t = w * mean + cam.translation();
  if (!(t.z() > kNearPlane)) return std::nullopt;

  const auto& k = cam.intrinsics;
  const double inv_z = 1.0 / t.z();
  Eigen::Matrix<double, 2, 3> jac;
  jac << k.fx * inv_z, 0.0, -k.fx * t.x() * inv_z * inv_z,
      0.0, k.fy * inv_z, -k.fy * t.y() * inv_z * inv_z;
  const Eigen::Matrix<double, 2, 3> tw = jac * w;

  Projection p;
  p.mean_2d = Vec2(k.fx * t.x() * inv_z + k.cx, k.fy * t.y() * inv_z + k.cy);
  p.cov_2d = tw * cov_3d * tw.transpose();
  p.cov_2d(0, 1) = p.cov_2d(1, 0) = 0.5 * (p.cov_2d(0, 1) + p.cov_2d(1, 0));
  p.cov_2d(0, 0) += dilation;
  p.cov_2d(1, 1) += dilation;
  p.depth = t.z();
  return p;
}

double evaluate_gaussian_2d(const Vec2& x, const Vec2& mean_2d, const Mat2& cov_2d) {
  const Vec2 d = x - mean_2d;
  return std::exp(-0.5 * d.dot(cov_2d.inverse() * d));
}

}  // namespace dualsplat
