// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <array>
#include <torch/torch.h>
#include <vector>

#include "objnerf/common.hpp"

namespace objnerf {

// Coordinate conventions used everywhere in this codebase:
//
//   * The world frame is object-centric: the origin sits at the object
//     center and the scene box is an axis-aligned cube around it.
//   * The camera frame follows the usual pinhole layout: +x right,
//     +y down, +z forward (the viewing direction).
//   * Extrinsics map world to camera: X_cam = R * X_world + t, so the
//     camera center in world coordinates is -R^T t, and t_z > 0 puts the
//     object in front of the camera.
//   * R = R_az(theta) * R_el(phi). Azimuth rotates about the world y axis
//     (the vertical axis; at zero pose the camera's y axis coincides with
//     it); elevation rotates about the camera x (right) axis. At
//     theta = phi = 0 the rotation is the identity: camera axes and world
//     axes coincide and the camera looks down world +z.
//
// Poses are parametrized by 7 numbers in this fixed order:
//   (cos_az, sin_az, cos_el, sin_el, t_x, t_y, t_z)
// with both (cos, sin) pairs on the unit circle. Serialization (manifest
// columns, checkpoints, the python bindings) always uses this order.

// 3x3 rotation about the y axis for angle with the given cosine/sine.
Eigen::Matrix3d azimuth_rotation(double cos_t, double sin_t);
// 3x3 rotation about the x axis.
Eigen::Matrix3d elevation_rotation(double cos_t, double sin_t);

// Normalizes (cos, sin) onto the unit circle. Throws InvalidPoseError when
// the pair norm is <= 1e-8; `what` names the offending pair in the message.
std::pair<double, double> normalize_pair(double c, double s, const char* what);

// Builds R = R_az * R_el from 4 raw numbers (cos_az, sin_az, cos_el,
// sin_el), normalizing each pair first. Degenerate pairs throw.
Eigen::Matrix3d rotation_from_params(const std::array<double, 4>& raw);

// Batched differentiable version: raw [B, 4] (or [4]) -> [B, 3, 3] (or
// [3, 3]). Gradients flow through the normalization.
torch::Tensor rotation_from_params(const torch::Tensor& raw);

// Normalizes the two (cos, sin) pairs of [B, 7] (or [7]) pose parameters,
// leaving the translation untouched. Differentiable; degenerate pairs throw.
torch::Tensor normalize_pose_params(const torch::Tensor& params);

// Splits normalized pose parameters into rotation matrices and translations:
// [B, 7] -> ([B, 3, 3], [B, 3]).
std::pair<torch::Tensor, torch::Tensor> pose_params_to_matrix(const torch::Tensor& params);

struct CameraPose {
  double cos_az = 1.0;
  double sin_az = 0.0;
  double cos_el = 1.0;
  double sin_el = 0.0;
  double t_x = 0.0;
  double t_y = 0.0;
  double t_z = 1.0;

  // Normalizes the rotation pairs and validates t_z > 0.
  static CameraPose from_raw(double cos_az, double sin_az, double cos_el, double sin_el,
                             double t_x, double t_y, double t_z);
  static CameraPose from_angles(double azimuth, double elevation, const Eigen::Vector3d& t);
  // Deserialization path: validates the stored numbers (unit pairs within
  // 1e-6, t_z > 0) but keeps them bit-exact instead of renormalizing.
  static CameraPose from_array(const std::array<double, 7>& v);

  std::array<double, 7> to_array() const;
  torch::Tensor to_tensor(torch::Dtype dtype = torch::kFloat64) const;  // [7]
  static CameraPose from_tensor(const torch::Tensor& params);           // [7]

  Eigen::Matrix3d rotation() const;
  Eigen::Vector3d translation() const { return {t_x, t_y, t_z}; }
  Eigen::Vector3d camera_center() const;  // -R^T t
  double azimuth() const { return std::atan2(sin_az, cos_az); }
  double elevation() const { return std::atan2(sin_el, cos_el); }
};

struct Intrinsics {
  double focal_x = 0.0;
  double focal_y = 0.0;
  double principal_x = 0.0;
  double principal_y = 0.0;
  int width = 0;
  int height = 0;

  void validate() const;
  // Intrinsics of the image cropped at (x0, y0) with side `crop_size` and
  // resampled to out_size x out_size pixels (pixel-center convention).
  Intrinsics cropped_resized(double x0, double y0, double crop_size, int out_size) const;
};

// Default intrinsics for a square render target: focal chosen so the
// +-0.4 scene box stays inside the frame under the default pose prior.
Intrinsics default_intrinsics(int image_size);

// One ray per pixel of a patch, plus optional supervision targets.
struct RayBatch {
  torch::Tensor origins;       // [N, 3]
  torch::Tensor directions;    // [N, 3], unit norm
  torch::Tensor pixel_coords;  // [N, 2] int64, (u, v)
  torch::Tensor target_rgb;    // [N, 3] in [0, 1], may be undefined
  torch::Tensor target_alpha;  // [N] in [0, 1], may be undefined

  int64_t size() const { return origins.defined() ? origins.size(0) : 0; }
  void validate() const;
};

// Pixel-coordinate list [N, 2] for a full H x W image, row-major.
torch::Tensor full_image_pixels(int width, int height);

// Differentiable ray generation from normalized pose parameters [7].
// Pixels must lie inside the image bounds (throws std::out_of_range).
RayBatch generate_rays(const torch::Tensor& pose_params, const Intrinsics& intr,
                       const torch::Tensor& pixels);
RayBatch generate_rays(const CameraPose& pose, const Intrinsics& intr,
                       const torch::Tensor& pixels, torch::Dtype dtype = torch::kFloat32);
// Explicit rotation/translation variant (used when a fitted offset rotation
// is folded into the pose at evaluation time). R [3,3], t [3].
RayBatch generate_rays_rt(const torch::Tensor& rotation, const torch::Tensor& translation,
                          const Intrinsics& intr, const torch::Tensor& pixels);

// Projects world points [N, 3] through the pose + pinhole model back to
// continuous pixel coordinates [N, 2]. Round-trips generate_rays.
torch::Tensor project_points(const CameraPose& pose, const Intrinsics& intr,
                             const torch::Tensor& points_world);

struct PosePrior {
  double azimuth_min = 0.0;
  double azimuth_max = 2.0 * M_PI;
  double elevation_min = -10.0 * M_PI / 180.0;
  double elevation_max = 40.0 * M_PI / 180.0;
  Eigen::Vector3d translation_mean{0.0, 0.0, 1.8};
  Eigen::Vector3d translation_spread{0.0, 0.0, 0.1};

  void validate() const;
};

// Uniform draw from the prior; deterministic for a given generator state.
CameraPose sample_pose_prior(const PosePrior& prior, torch::Generator& gen);

struct OffsetFit {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  double residual = 0.0;  // mean squared Frobenius distance after alignment
};

// Orthogonal Procrustes over stacked rotations: the single rotation W
// minimizing mean_i |W * R_pred_i - R_gt_i|_F^2.
OffsetFit fit_offset_rotation(const std::vector<CameraPose>& pred,
                              const std::vector<CameraPose>& gt);

// Geodesic angle (radians) between two rotations.
double rotation_geodesic_angle(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

}  // namespace objnerf
