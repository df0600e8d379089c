// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

// Core Gaussian and camera math.
//
// Axis convention (used everywhere in the library):
//   world: right-handed, +z up. An orbit camera at azimuth a, elevation e and
//   radius r sits at r * (cos e sin a, -cos e cos a, sin e), so azimuth 0 looks
//   along +y and elevation 90 deg looks straight down.
//   camera: +x right, +y down, +z forward (towards the origin).
//   pixels: continuous coordinates, pixel (col, row) has its center at
//   (col + 0.5, row + 0.5); the principal point is (width / 2, height / 2).

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstddef>
#include <optional>
#include <vector>

namespace dualsplat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;  // quaternions are (w, x, y, z)
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kCovarianceDilation = 0.3;  // px^2, added to the 2D diagonal
inline constexpr double kNearPlane = 0.01;

double sigmoid(double x);
double logit(double p);

// Structure-of-arrays Gaussian set. Parameters are stored pre-activation:
// scales as logs, opacities as logits, rotations unnormalized.
struct GaussianCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> log_scales;
  std::vector<Vec4> rotations;
  std::vector<Vec3> colors_dc;
  std::vector<double> opacity_logits;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }

  void resize(std::size_t n);
  void reserve(std::size_t n);
  void push_back(const Vec3& position, const Vec3& log_scale, const Vec4& rotation,
                 const Vec3& color, double opacity_logit);
  // Copies point `index` of `other` onto the end.
  void append_from(const GaussianCloud& other, std::size_t index);
  // Keeps points whose mask entry is true, preserving order.
  void filter(const std::vector<bool>& keep);

  // Throws kContractViolation unless all arrays agree in length and every
  // value is finite.
  void validate() const;

  bool operator==(const GaussianCloud& other) const;
};

struct Camera {
  double azimuth = 0.0;    // degrees
  double elevation = 0.0;  // degrees
  double radius = 4.0;
  double fov_y = 33.8;  // degrees
  int width = 64;
  int height = 64;

  void validate() const;
  // Same pose and field of view at round(ratio * size). ratio must be in (0, 1].
  Camera scaled(double ratio) const;
  Vec3 center() const;

  bool operator==(const Camera&) const = default;
};

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
};

struct CameraMatrices {
  Mat4 world_to_camera = Mat4::Identity();
  Intrinsics intrinsics;

  Mat3 rotation() const { return world_to_camera.topLeftCorner<3, 3>(); }
  Vec3 translation() const { return world_to_camera.topRightCorner<3, 1>(); }
};

// Throws kDegenerateRotation when |q| <= 1e-12.
Mat3 quat_to_rotation(const Vec4& q);

Mat3 covariance_3d(const Vec3& log_scale, const Vec4& q);

CameraMatrices camera_matrices(const Camera& cam);

struct Projection {
  Vec2 mean_2d = Vec2::Zero();
  Mat2 cov_2d = Mat2::Identity();
  double depth = 0.0;
};

// EWA projection. Returns nullopt when the mean is not in front of the near
// plane (culled).
std::optional<Projection> project_gaussian(const Vec3& mean, const Mat3& cov_3d,
                                           const CameraMatrices& cam,
                                           double dilation = kCovarianceDilation);

// Unnormalized Gaussian exp(-0.5 d^T cov^-1 d).
double evaluate_gaussian_2d(const Vec2& x, const Vec2& mean_2d, const Mat2& cov_2d);

}  // namespace dualsplat
