// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <torch/torch.h>

#include "objnerf/common.hpp"
#include "objnerf/encoding.hpp"

namespace objnerf {

// Folds the second coordinate onto the positive half space: (x, |y|, z).
// Used to hard-wire mirror symmetry of the density field.
Eigen::Vector3d symmetrize_point(const Eigen::Vector3d& x);
torch::Tensor symmetrize_points(const torch::Tensor& x);  // [..., 3]

// True iff the point lies in the closed axis-aligned cube of the given
// half extent.
bool box_mask(const Eigen::Vector3d& x, double half_extent);
torch::Tensor box_mask(const torch::Tensor& x, double half_extent);  // [..., 3] -> bool [...]

struct FieldConfig {
  int mlp_depth = 6;
  int mlp_width = 128;
  int code_dim = 64;
  double scene_box_half_extent = 0.4;
  bool symmetry_enabled = false;
  EncodingConfig position_encoding{10, true, 1};
  EncodingConfig direction_encoding{4, true, 1};
  std::string hidden_activation = "relu";  // relu | softplus

  void validate() const;
};

struct LatentCodes {
  torch::Tensor shape;       // [64] or [N, 64]
  torch::Tensor appearance;  // [64] or [N, 64]
};

struct FieldOutput {
  torch::Tensor density;  // [N], >= 0, exactly 0 outside the scene box
  torch::Tensor rgb;      // [N, 3] in [0, 1]
};

// Point + direction sampler used by the renderer. Captures codes, network
// and encoding progress (or an analytic scene) at the call site.
using FieldFn = std::function<FieldOutput(const torch::Tensor& points, const torch::Tensor& dirs)>;

// Conditional radiance field: an MLP trunk maps the encoded (optionally
// symmetrized) position together with the shape code to density; a color
// branch additionally sees the encoded view direction and the appearance
// code. Density is softplus-activated and hard-masked to zero outside the
// scene box; color is sigmoid-activated.
class ConditionalFieldImpl : public torch::nn::Module {
 public:
  explicit ConditionalFieldImpl(FieldConfig config);

  FieldOutput forward(const torch::Tensor& points, const torch::Tensor& dirs,
                      const LatentCodes& codes, double progress);

  // Convenience adapter for the renderer with codes and progress bound.
  FieldFn bind(const LatentCodes& codes, double progress);

  const FieldConfig& config() const { return config_; }

 private:
  FieldConfig config_;
  torch::nn::ModuleList trunk_{nullptr};
  torch::nn::Linear density_head_{nullptr};
  torch::nn::Linear color_hidden_{nullptr};
  torch::nn::Linear color_head_{nullptr};

  torch::Tensor activate(const torch::Tensor& h) const;
};
TORCH_MODULE(ConditionalField);

}  // namespace objnerf
