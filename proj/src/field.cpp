// SPDX-License-Identifier: Apache-2.0
#include "objnerf/field.hpp"

namespace objnerf {

Eigen::Vector3d symmetrize_point(const Eigen::Vector3d& x) {
  return {x.x(), std::abs(x.y()), x.z()};
}

torch::Tensor symmetrize_points(const torch::Tensor& x) {
  if (x.size(-1) != 3) throw ArgumentError("points must have last dimension 3");
  return torch::cat({x.narrow(-1, 0, 1), x.narrow(-1, 1, 1).abs(), x.narrow(-1, 2, 1)}, -1);
}

bool box_mask(const Eigen::Vector3d& x, double half_extent) {
  return x.array().abs().maxCoeff() <= half_extent;
}

torch::Tensor box_mask(const torch::Tensor& x, double half_extent) {
  if (x.size(-1) != 3) throw ArgumentError("points must have last dimension 3");
  return std::get<0>(x.abs().max(-1)) <= half_extent;
}

void FieldConfig::validate() const {
  if (mlp_depth < 1 || mlp_width < 1) throw ArgumentError("field depth and width must be >= 1");
  if (code_dim < 1) throw ArgumentError("field code_dim must be >= 1");
  if (!(scene_box_half_extent > 0.0)) throw ArgumentError("scene box half extent must be > 0");
  if (hidden_activation != "relu" && hidden_activation != "softplus") {
    throw ArgumentError("hidden_activation must be 'relu' or 'softplus'");
  }
  position_encoding.validate();
  direction_encoding.validate();
}

ConditionalFieldImpl::ConditionalFieldImpl(FieldConfig config) : config_(std::move(config)) {
  config_.validate();
  const int pos_dim = config_.position_encoding.output_dim(3);
  const int dir_dim = config_.direction_encoding.output_dim(3);
  trunk_ = torch::nn::ModuleList();
  for (int i = 0; i < config_.mlp_depth; ++i) {
    const int in = i == 0 ? pos_dim + config_.code_dim : config_.mlp_width;
    trunk_->push_back(torch::nn::Linear(in, config_.mlp_width));
  }
  register_module("trunk", trunk_);
  density_head_ = register_module("density_head", torch::nn::Linear(config_.mlp_width, 1));
  color_hidden_ = register_module(
      "color_hidden",
      torch::nn::Linear(config_.mlp_width + dir_dim + config_.code_dim, config_.mlp_width));
  color_head_ = register_module("color_head", torch::nn::Linear(config_.mlp_width, 3));
}

torch::Tensor ConditionalFieldImpl::activate(const torch::Tensor& h) const {
  return config_.hidden_activation == "relu" ? torch::relu(h) : torch::softplus(h);
}

namespace {

torch::Tensor broadcast_code(const torch::Tensor& code, int64_t n, int expected_dim,
                             const char* name) {
  if (!code.defined()) throw ArgumentError(std::string(name) + " code is undefined");
  if (code.dim() == 1) {
    if (code.size(0) != expected_dim) {
      throw ArgumentError(std::string(name) + " code must have dimension " +
                          std::to_string(expected_dim));
    }
    return code.unsqueeze(0).expand({n, expected_dim});
  }
  if (code.dim() != 2 || code.size(1) != expected_dim || code.size(0) != n) {
    throw ArgumentError(std::string(name) + " code has wrong shape");
  }
  return code;
}

}  // namespace

FieldOutput ConditionalFieldImpl::forward(const torch::Tensor& points, const torch::Tensor& dirs,
                                          const LatentCodes& codes, double progress) {
  if (points.dim() != 2 || points.size(1) != 3) throw ArgumentError("points must be [N, 3]");
  if (dirs.dim() != 2 || dirs.size(1) != 3) throw ArgumentError("dirs must be [N, 3]");
  if (dirs.size(0) != points.size(0)) throw ArgumentError("points and dirs sizes disagree");
  const int64_t n = points.size(0);
  auto z_s = broadcast_code(codes.shape, n, config_.code_dim, "shape").to(points.scalar_type());
  auto z_a =
      broadcast_code(codes.appearance, n, config_.code_dim, "appearance").to(points.scalar_type());

  auto p = config_.symmetry_enabled ? symmetrize_points(points) : points;
  auto enc_x = positional_encode(p, config_.position_encoding, progress);
  auto h = torch::cat({enc_x, z_s}, -1);
  for (size_t i = 0; i < trunk_->size(); ++i) {
    h = activate(trunk_[i]->as<torch::nn::Linear>()->forward(h));
  }
  auto raw_density = torch::softplus(density_head_->forward(h)).squeeze(-1);
  // Hard zero outside the scene box, not just a small value.
  auto inside = box_mask(points, config_.scene_box_half_extent).to(points.scalar_type());
  FieldOutput out;
  out.density = raw_density * inside;

  auto enc_d = positional_encode(dirs, config_.direction_encoding, progress);
  auto hc = activate(color_hidden_->forward(torch::cat({h, enc_d, z_a}, -1)));
  out.rgb = torch::sigmoid(color_head_->forward(hc));
  return out;
}

FieldFn ConditionalFieldImpl::bind(const LatentCodes& codes, double progress) {
  return [this, codes, progress](const torch::Tensor& points, const torch::Tensor& dirs) {
    return forward(points, dirs, codes, progress);
  };
}

}  // namespace objnerf
