// SPDX-License-Identifier: Apache-2.0
#include "objnerf/geometry.hpp"

#include <cmath>
#include <sstream>

namespace objnerf {

namespace {

constexpr double kPairNormFloor = 1e-8;

torch::Tensor as_batched(const torch::Tensor& t, int64_t last_dim, bool& was_flat) {
  was_flat = t.dim() == 1;
  torch::Tensor out = was_flat ? t.unsqueeze(0) : t;
  if (out.dim() != 2 || out.size(1) != last_dim) {
    std::ostringstream os;
    os << "expected tensor of shape [" << last_dim << "] or [B, " << last_dim << "], got "
       << t.sizes();
    throw ArgumentError(os.str());
  }
  return out;
}

}  // namespace

Eigen::Matrix3d azimuth_rotation(double c, double s) {
  Eigen::Matrix3d r;
  r << c, 0.0, s,  //
      0.0, 1.0, 0.0,
      -s, 0.0, c;
  return r;
}

Eigen::Matrix3d elevation_rotation(double c, double s) {
  Eigen::Matrix3d r;
  r << 1.0, 0.0, 0.0,  //
      0.0, c, -s,
      0.0, s, c;
  return r;
}

std::pair<double, double> normalize_pair(double c, double s, const char* what) {
  const double n = std::sqrt(c * c + s * s);
  if (!(n > kPairNormFloor)) {
    std::ostringstream os;
    os << "degenerate " << what << " (cos, sin) pair: (" << c << ", " << s << "), norm " << n
       << " <= 1e-8";
    throw InvalidPoseError(os.str());
  }
  return {c / n, s / n};
}

Eigen::Matrix3d rotation_from_params(const std::array<double, 4>& raw) {
  auto [c_az, s_az] = normalize_pair(raw[0], raw[1], "azimuth");
  auto [c_el, s_el] = normalize_pair(raw[2], raw[3], "elevation");
  return azimuth_rotation(c_az, s_az) * elevation_rotation(c_el, s_el);
}

namespace {

// Normalizes the two (cos, sin) columns of raw [B, 4] with the degeneracy
// check. Shared by the tensor paths below; keeps autograd intact.
torch::Tensor normalize_pairs_tensor(const torch::Tensor& raw) {
  auto az = raw.narrow(-1, 0, 2);
  auto el = raw.narrow(-1, 2, 2);
  auto az_norm = az.norm(2, -1, /*keepdim=*/true);
  auto el_norm = el.norm(2, -1, /*keepdim=*/true);
  if ((az_norm <= kPairNormFloor).any().item<bool>()) {
    auto idx = (az_norm.squeeze(-1) <= kPairNormFloor).nonzero();
    throw InvalidPoseError("degenerate azimuth (cos, sin) pair at batch index " +
                           std::to_string(idx[0].item<int64_t>()));
  }
  if ((el_norm <= kPairNormFloor).any().item<bool>()) {
    auto idx = (el_norm.squeeze(-1) <= kPairNormFloor).nonzero();
    throw InvalidPoseError("degenerate elevation (cos, sin) pair at batch index " +
                           std::to_string(idx[0].item<int64_t>()));
  }
  return torch::cat({az / az_norm, el / el_norm}, -1);
}

}  // namespace

torch::Tensor rotation_from_params(const torch::Tensor& raw) {
  bool flat = false;
  auto r = as_batched(raw, 4, flat);
  auto n = normalize_pairs_tensor(r);
  auto c_az = n.select(-1, 0);
  auto s_az = n.select(-1, 1);
  auto c_el = n.select(-1, 2);
  auto s_el = n.select(-1, 3);
  auto zero = torch::zeros_like(c_az);
  auto one = torch::ones_like(c_az);
  // R_az (about y) composed with R_el (about x), rows stacked explicitly.
  auto r_az = torch::stack({torch::stack({c_az, zero, s_az}, -1),
                            torch::stack({zero, one, zero}, -1),
                            torch::stack({-s_az, zero, c_az}, -1)},
                           -2);
  auto r_el = torch::stack({torch::stack({one, zero, zero}, -1),
                            torch::stack({zero, c_el, -s_el}, -1),
                            torch::stack({zero, s_el, c_el}, -1)},
                           -2);
  auto rot = torch::matmul(r_az, r_el);
  return flat ? rot.squeeze(0) : rot;
}

torch::Tensor normalize_pose_params(const torch::Tensor& params) {
  bool flat = false;
  auto p = as_batched(params, 7, flat);
  auto pairs = normalize_pairs_tensor(p.narrow(-1, 0, 4));
  auto out = torch::cat({pairs, p.narrow(-1, 4, 3)}, -1);
  return flat ? out.squeeze(0) : out;
}

std::pair<torch::Tensor, torch::Tensor> pose_params_to_matrix(const torch::Tensor& params) {
  bool flat = false;
  auto p = as_batched(params, 7, flat);
  auto rot = rotation_from_params(p.narrow(-1, 0, 4));
  auto t = p.narrow(-1, 4, 3);
  if (flat) return {rot.squeeze(0), t.squeeze(0)};
  return {rot, t};
}

CameraPose CameraPose::from_raw(double cos_az, double sin_az, double cos_el, double sin_el,
                                double t_x, double t_y, double t_z) {
  auto [ca, sa] = normalize_pair(cos_az, sin_az, "azimuth");
  auto [ce, se] = normalize_pair(cos_el, sin_el, "elevation");
  if (!(t_z > 0.0)) {
    throw InvalidPoseError("camera t_z must be positive, got " + std::to_string(t_z));
  }
  return CameraPose{ca, sa, ce, se, t_x, t_y, t_z};
}

CameraPose CameraPose::from_angles(double azimuth, double elevation, const Eigen::Vector3d& t) {
  return from_raw(std::cos(azimuth), std::sin(azimuth), std::cos(elevation), std::sin(elevation),
                  t.x(), t.y(), t.z());
}

CameraPose CameraPose::from_array(const std::array<double, 7>& v) {
  auto check_unit = [](double c, double s, const char* what) {
    if (std::abs(c * c + s * s - 1.0) > 1e-6) {
      throw InvalidPoseError(std::string("stored ") + what + " pair is not unit length");
    }
  };
  check_unit(v[0], v[1], "azimuth");
  check_unit(v[2], v[3], "elevation");
  if (!(v[6] > 0.0)) {
    throw InvalidPoseError("stored pose has non-positive t_z");
  }
  return CameraPose{v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
}

std::array<double, 7> CameraPose::to_array() const {
  return {cos_az, sin_az, cos_el, sin_el, t_x, t_y, t_z};
}

torch::Tensor CameraPose::to_tensor(torch::Dtype dtype) const {
  auto a = to_array();
  return torch::tensor({a[0], a[1], a[2], a[3], a[4], a[5], a[6]}, torch::kFloat64).to(dtype);
}

CameraPose CameraPose::from_tensor(const torch::Tensor& params) {
  if (params.dim() != 1 || params.size(0) != 7) {
    throw ArgumentError("pose tensor must have shape [7]");
  }
  auto p = params.to(torch::kFloat64).contiguous();
  const double* d = p.data_ptr<double>();
  return from_raw(d[0], d[1], d[2], d[3], d[4], d[5], d[6]);
}

Eigen::Matrix3d CameraPose::rotation() const {
  return azimuth_rotation(cos_az, sin_az) * elevation_rotation(cos_el, sin_el);
}

Eigen::Vector3d CameraPose::camera_center() const {
  return -rotation().transpose() * translation();
}

void Intrinsics::validate() const {
  if (!(focal_x > 0.0) || !(focal_y > 0.0)) {
    throw ArgumentError("intrinsics focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw ArgumentError("intrinsics image size must be positive");
  }
  if (principal_x < 0.0 || principal_x > width || principal_y < 0.0 || principal_y > height) {
    throw ArgumentError("principal point must lie within the image bounds");
  }
}

Intrinsics Intrinsics::cropped_resized(double x0, double y0, double crop_size, int out_size) const {
  // Pixel centers sit at integer coordinates; resampling a crop of side
  // `crop_size` to `out_size` maps x -> (x + 0.5 - x0) * s - 0.5.
  const double s = static_cast<double>(out_size) / crop_size;
  Intrinsics out;
  out.focal_x = focal_x * s;
  out.focal_y = focal_y * s;
  out.principal_x = (principal_x + 0.5 - x0) * s - 0.5;
  out.principal_y = (principal_y + 0.5 - y0) * s - 0.5;
  out.width = out_size;
  out.height = out_size;
  return out;
}

Intrinsics default_intrinsics(int image_size) {
  Intrinsics intr;
  intr.focal_x = intr.focal_y = image_size * (80.0 / 112.0);
  intr.principal_x = intr.principal_y = image_size / 2.0;
  intr.width = intr.height = image_size;
  return intr;
}

void RayBatch::validate() const {
  if (!origins.defined() || !directions.defined() || !pixel_coords.defined()) {
    throw ArgumentError("ray batch is missing origins, directions or pixel coords");
  }
  const int64_t n = origins.size(0);
  if (directions.size(0) != n || pixel_coords.size(0) != n) {
    throw ArgumentError("ray batch field sizes disagree");
  }
  if (target_rgb.defined() && target_rgb.size(0) != n) {
    throw ArgumentError("ray batch target_rgb size disagrees");
  }
  if (target_alpha.defined() && target_alpha.size(0) != n) {
    throw ArgumentError("ray batch target_alpha size disagrees");
  }
  auto norms = directions.norm(2, -1);
  if ((norms - 1.0).abs().max().item<double>() > 1e-6) {
    throw ArgumentError("ray directions must be unit norm");
  }
}

torch::Tensor full_image_pixels(int width, int height) {
  auto u = torch::arange(width, torch::kInt64);
  auto v = torch::arange(height, torch::kInt64);
  auto grid = torch::meshgrid({v, u}, "ij");
  return torch::stack({grid[1].reshape(-1), grid[0].reshape(-1)}, -1);  // (u, v)
}

namespace {

void check_pixels_in_bounds(const torch::Tensor& pixels, const Intrinsics& intr) {
  if (pixels.dim() != 2 || pixels.size(1) != 2) {
    throw ArgumentError("pixel list must have shape [N, 2]");
  }
  auto u = pixels.select(1, 0);
  auto v = pixels.select(1, 1);
  const int64_t u_min = u.min().item<int64_t>();
  const int64_t u_max = u.max().item<int64_t>();
  const int64_t v_min = v.min().item<int64_t>();
  const int64_t v_max = v.max().item<int64_t>();
  if (u_min < 0 || v_min < 0 || u_max >= intr.width || v_max >= intr.height) {
    std::ostringstream os;
    os << "pixel coordinates outside " << intr.width << "x" << intr.height
       << " image (u in [" << u_min << ", " << u_max << "], v in [" << v_min << ", " << v_max
       << "])";
    throw std::out_of_range(os.str());
  }
}

}  // namespace

RayBatch generate_rays_rt(const torch::Tensor& rotation, const torch::Tensor& translation,
                          const Intrinsics& intr, const torch::Tensor& pixels) {
  intr.validate();
  check_pixels_in_bounds(pixels, intr);
  if (rotation.dim() != 2 || rotation.size(0) != 3 || rotation.size(1) != 3) {
    throw ArgumentError("rotation must have shape [3, 3]");
  }
  if (translation.dim() != 1 || translation.size(0) != 3) {
    throw ArgumentError("translation must have shape [3]");
  }
  const auto dtype = rotation.scalar_type();
  auto px = pixels.to(dtype);
  // Camera-frame directions through pixel centers: ((u - cx)/fx, (v - cy)/fy, 1).
  auto x = (px.select(1, 0) - intr.principal_x) / intr.focal_x;
  auto y = (px.select(1, 1) - intr.principal_y) / intr.focal_y;
  auto dirs_cam = torch::stack({x, y, torch::ones_like(x)}, -1);  // [N, 3]
  // d_world = R^T d_cam; with row vectors that is d_cam @ R.
  auto dirs_world = torch::matmul(dirs_cam, rotation);
  dirs_world = dirs_world / dirs_world.norm(2, -1, /*keepdim=*/true);
  auto center = -torch::matmul(rotation.transpose(0, 1), translation);  // [3]
  RayBatch batch;
  batch.origins = center.unsqueeze(0).expand({pixels.size(0), 3}).contiguous();
  batch.directions = dirs_world;
  batch.pixel_coords = pixels.to(torch::kInt64);
  return batch;
}

RayBatch generate_rays(const torch::Tensor& pose_params, const Intrinsics& intr,
                       const torch::Tensor& pixels) {
  if (pose_params.dim() != 1 || pose_params.size(0) != 7) {
    throw ArgumentError("pose parameters must have shape [7]");
  }
  auto [rot, t] = pose_params_to_matrix(pose_params);
  return generate_rays_rt(rot, t, intr, pixels);
}

RayBatch generate_rays(const CameraPose& pose, const Intrinsics& intr, const torch::Tensor& pixels,
                       torch::Dtype dtype) {
  return generate_rays(pose.to_tensor(dtype), intr, pixels);
}

torch::Tensor project_points(const CameraPose& pose, const Intrinsics& intr,
                             const torch::Tensor& points_world) {
  if (points_world.dim() != 2 || points_world.size(1) != 3) {
    throw ArgumentError("points must have shape [N, 3]");
  }
  auto pts = points_world.to(torch::kFloat64);
  Eigen::Matrix3d rot = pose.rotation();
  // Eigen is column-major, so reading its buffer row-major yields R^T,
  // which is exactly what right-multiplying row vectors needs.
  auto rot_t = torch::from_blob(rot.data(), {3, 3}, torch::kFloat64).clone();
  auto t = pose.to_tensor(torch::kFloat64).narrow(0, 4, 3);
  auto cam = torch::matmul(pts, rot_t) + t;  // [N, 3]
  auto z = cam.select(1, 2);
  auto u = cam.select(1, 0) / z * intr.focal_x + intr.principal_x;
  auto v = cam.select(1, 1) / z * intr.focal_y + intr.principal_y;
  return torch::stack({u, v}, -1);
}

void PosePrior::validate() const {
  if (azimuth_max < azimuth_min || elevation_max < elevation_min) {
    throw ArgumentError("pose prior angle ranges must be non-empty");
  }
  if ((translation_spread.array() < 0.0).any()) {
    throw ArgumentError("pose prior translation spread must be non-negative");
  }
  if (!(translation_mean.z() - translation_spread.z() > 0.0)) {
    throw ArgumentError("pose prior must keep t_z positive");
  }
}

CameraPose sample_pose_prior(const PosePrior& prior, torch::Generator& gen) {
  prior.validate();
  auto u = torch::rand({6}, gen, torch::kFloat64);
  const double* d = u.data_ptr<double>();
  const double az = prior.azimuth_min + d[0] * (prior.azimuth_max - prior.azimuth_min);
  const double el = prior.elevation_min + d[1] * (prior.elevation_max - prior.elevation_min);
  Eigen::Vector3d t = prior.translation_mean;
  for (int i = 0; i < 3; ++i) {
    t[i] += (2.0 * d[2 + i] - 1.0) * prior.translation_spread[i];
  }
  return CameraPose::from_angles(az, el, t);
}

OffsetFit fit_offset_rotation(const std::vector<CameraPose>& pred,
                              const std::vector<CameraPose>& gt) {
  if (pred.empty() || gt.empty()) {
    throw ArgumentError("fit_offset_rotation requires non-empty pose lists");
  }
  if (pred.size() != gt.size()) {
    throw ArgumentError("fit_offset_rotation pose lists must have equal length");
  }
  // argmax_W tr(W^T sum_i R_gt R_pred^T) subject to W in SO(3).
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < pred.size(); ++i) {
    m += gt[i].rotation() * pred[i].rotation().transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  Eigen::Vector3d sign(1.0, 1.0, (u * v.transpose()).determinant() > 0.0 ? 1.0 : -1.0);
  OffsetFit fit;
  fit.rotation = u * sign.asDiagonal() * v.transpose();
  double sum = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    sum += (fit.rotation * pred[i].rotation() - gt[i].rotation()).squaredNorm();
  }
  fit.residual = sum / static_cast<double>(pred.size());
  return fit;
}

double rotation_geodesic_angle(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace objnerf
