// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <torch/torch.h>

#include "objnerf/common.hpp"
#include "objnerf/field.hpp"

namespace objnerf {

struct EncoderConfig {
  int input_size = 112;
  int code_dim = 64;
  // "tiny" is a 4-layer conv stack for tests and desk-scale runs; "full"
  // is a bottleneck residual stack comparable to a 50-layer backbone.
  std::string backbone = "tiny";
  bool mask_as_channel = true;
  double t_z_min = 0.2;

  void validate() const;
  int in_channels() const { return mask_as_channel ? 4 : 3; }
};

struct EncoderOutput {
  LatentCodes codes;          // shape/appearance, [B, code_dim] each
  torch::Tensor pose_params;  // [B, 7], (cos, sin) pairs unit, t_z > t_z_min
};

// Two independent feature towers: one predicts the latent codes, the other
// the camera pose. The pose head normalizes its (cos, sin) pairs and maps
// t_z through softplus + t_z_min, so every emitted pose satisfies the
// CameraPose invariants by construction.
class ImageEncoderImpl : public torch::nn::Module {
 public:
  explicit ImageEncoderImpl(EncoderConfig config);

  // image [B, 3, S, S] in [0, 1], mask [B, 1, S, S] in [0, 1]; S must equal
  // config.input_size. The background is re-zeroed with the mask before
  // encoding; the mask is appended as a fourth channel when configured.
  EncoderOutput forward(const torch::Tensor& image, const torch::Tensor& mask);

  const EncoderConfig& config() const { return config_; }

  // Optional hook for loading pretrained tower weights from a checkpoint
  // container (parameters under "codes_tower." / "pose_tower.").
  void load_backbone(const std::map<std::string, torch::Tensor>& params);

 private:
  EncoderConfig config_;
  torch::nn::Sequential codes_tower_{nullptr};
  torch::nn::Sequential pose_tower_{nullptr};
  torch::nn::Linear codes_head_{nullptr};
  torch::nn::Linear pose_head_{nullptr};
  int feature_dim_ = 0;
};
TORCH_MODULE(ImageEncoder);

struct DiscriminatorConfig {
  int patch_size = 80;
  int in_channels = 3;  // 3 for color, 1 for alpha patches
  int base_channels = 64;
  double dropout = 0.5;

  void validate() const;
};

// 3 strided conv layers with leaky ReLU, dropout, then a fully connected
// layer to a single logit.
class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit PatchDiscriminatorImpl(DiscriminatorConfig config);

  // patch [B, C, P, P] in [0, 1] -> logits [B]
  torch::Tensor forward(const torch::Tensor& patch);

  const DiscriminatorConfig& config() const { return config_; }

 private:
  DiscriminatorConfig config_;
  torch::nn::Sequential body_{nullptr};
  torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

PatchDiscriminator make_color_discriminator(int patch_size, int base_channels = 64);
PatchDiscriminator make_alpha_discriminator(int patch_size, int base_channels = 64);

int64_t count_parameters(const torch::nn::Module& module);

// The learned half of the pipeline: image -> (codes, pose) -> radiance field.
struct Model {
  ImageEncoder encoder{nullptr};
  ConditionalField field{nullptr};
};

}  // namespace objnerf
