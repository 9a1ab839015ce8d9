// SPDX-License-Identifier: Apache-2.0
#include "objnerf/networks.hpp"

#include <cmath>

namespace objnerf {

namespace nn = torch::nn;

void EncoderConfig::validate() const {
  if (input_size < 16) throw ArgumentError("encoder input_size must be >= 16");
  if (code_dim < 1) throw ArgumentError("encoder code_dim must be >= 1");
  if (backbone != "tiny" && backbone != "full") {
    throw ArgumentError("encoder backbone must be 'tiny' or 'full'");
  }
  if (!(t_z_min > 0.0)) throw ArgumentError("encoder t_z_min must be positive");
}

namespace {

nn::Conv2d conv3x3(int in, int out, int stride) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

nn::Conv2d conv1x1(int in, int out, int stride) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, 1).stride(stride));
}

// Bottleneck residual block with group norm (1x1 -> 3x3 -> 1x1, expansion 4).
struct BottleneckImpl : nn::Module {
  BottleneckImpl(int in, int planes, int stride) {
    const int out = planes * 4;
    conv1 = register_module("conv1", conv1x1(in, planes, 1));
    norm1 = register_module("norm1", nn::GroupNorm(nn::GroupNormOptions(32, planes)));
    conv2 = register_module("conv2", conv3x3(planes, planes, stride));
    norm2 = register_module("norm2", nn::GroupNorm(nn::GroupNormOptions(32, planes)));
    conv3 = register_module("conv3", conv1x1(planes, out, 1));
    norm3 = register_module("norm3", nn::GroupNorm(nn::GroupNormOptions(32, out)));
    if (stride != 1 || in != out) {
      down = register_module("down", conv1x1(in, out, stride));
      down_norm = register_module("down_norm", nn::GroupNorm(nn::GroupNormOptions(32, out)));
    }
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto identity = down ? down_norm->forward(down->forward(x)) : x;
    auto h = torch::relu(norm1->forward(conv1->forward(x)));
    h = torch::relu(norm2->forward(conv2->forward(h)));
    h = norm3->forward(conv3->forward(h));
    return torch::relu(h + identity);
  }

  nn::Conv2d conv1{nullptr}, conv2{nullptr}, conv3{nullptr}, down{nullptr};
  nn::GroupNorm norm1{nullptr}, norm2{nullptr}, norm3{nullptr}, down_norm{nullptr};
};
TORCH_MODULE(Bottleneck);

// Feature tower ending in global average pooling; returns [B, feature_dim].
std::pair<nn::Sequential, int> make_backbone(const EncoderConfig& cfg) {
  nn::Sequential seq;
  if (cfg.backbone == "tiny") {
    int chans[] = {cfg.in_channels(), 16, 32, 64, 64};
    for (int i = 0; i < 4; ++i) {
      seq->push_back(nn::Conv2d(nn::Conv2dOptions(chans[i], chans[i + 1], 3).stride(2).padding(1)));
      seq->push_back(nn::ReLU());
    }
    seq->push_back(nn::AdaptiveAvgPool2d(nn::AdaptiveAvgPool2dOptions({1, 1})));
    seq->push_back(nn::Flatten());
    return {seq, 64};
  }
  // "full": bottleneck stages [3, 4, 6, 3], widths 64/128/256/512.
  seq->push_back(nn::Conv2d(nn::Conv2dOptions(cfg.in_channels(), 64, 7).stride(2).padding(3)));
  seq->push_back(nn::GroupNorm(nn::GroupNormOptions(32, 64)));
  seq->push_back(nn::ReLU());
  seq->push_back(nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2).padding(1)));
  int in = 64;
  const int stage_planes[] = {64, 128, 256, 512};
  const int stage_blocks[] = {3, 4, 6, 3};
  for (int s = 0; s < 4; ++s) {
    for (int b = 0; b < stage_blocks[s]; ++b) {
      const int stride = (b == 0 && s > 0) ? 2 : 1;
      seq->push_back(Bottleneck(in, stage_planes[s], stride));
      in = stage_planes[s] * 4;
    }
  }
  seq->push_back(nn::AdaptiveAvgPool2d(nn::AdaptiveAvgPool2dOptions({1, 1})));
  seq->push_back(nn::Flatten());
  return {seq, in};
}

}  // namespace

ImageEncoderImpl::ImageEncoderImpl(EncoderConfig config) : config_(std::move(config)) {
  config_.validate();
  auto [codes_tower, dim] = make_backbone(config_);
  feature_dim_ = dim;
  auto [pose_tower, dim2] = make_backbone(config_);
  codes_tower_ = register_module("codes_tower", codes_tower);
  pose_tower_ = register_module("pose_tower", pose_tower);
  codes_head_ = register_module("codes_head", nn::Linear(feature_dim_, 2 * config_.code_dim));
  pose_head_ = register_module("pose_head", nn::Linear(feature_dim_, 7));
  // Start every image at the canonical front view: unit (cos, sin) pairs
  // and t_z near the prior mean. Small weights keep early pose estimates in
  // the basin where the pair normalization is well conditioned.
  {
    torch::NoGradGuard no_grad;
    pose_head_->weight.mul_(0.01);
    const double tz_raw = std::log(std::expm1(1.8 - config_.t_z_min));
    pose_head_->bias.copy_(
        torch::tensor({1.0, 0.0, 1.0, 0.0, 0.0, 0.0, tz_raw}, torch::kFloat32));
  }
}

EncoderOutput ImageEncoderImpl::forward(const torch::Tensor& image, const torch::Tensor& mask) {
  if (image.dim() != 4 || image.size(1) != 3 || image.size(2) != config_.input_size ||
      image.size(3) != config_.input_size) {
    throw ArgumentError("encoder expects image [B, 3, " + std::to_string(config_.input_size) +
                        ", " + std::to_string(config_.input_size) + "]");
  }
  if (mask.dim() != 4 || mask.size(1) != 1 || mask.size(2) != config_.input_size ||
      mask.size(3) != config_.input_size || mask.size(0) != image.size(0)) {
    throw ArgumentError("encoder expects mask [B, 1, S, S] matching the image");
  }
  auto x = image * mask;
  if (config_.mask_as_channel) {
    x = torch::cat({x, mask}, 1);
  }
  auto codes_feat = codes_tower_->forward(x);
  auto both = codes_head_->forward(codes_feat);
  EncoderOutput out;
  out.codes.shape = both.narrow(1, 0, config_.code_dim);
  out.codes.appearance = both.narrow(1, config_.code_dim, config_.code_dim);

  auto raw = pose_head_->forward(pose_tower_->forward(x));  // [B, 7]
  auto rot = raw.narrow(1, 0, 4);
  auto az = rot.narrow(1, 0, 2);
  auto el = rot.narrow(1, 2, 2);
  auto az_n = az.norm(2, 1, true);
  auto el_n = el.norm(2, 1, true);
  if ((az_n <= 1e-8).any().item<bool>() || (el_n <= 1e-8).any().item<bool>()) {
    throw InvalidPoseError("encoder pose head emitted a degenerate (cos, sin) pair");
  }
  auto t_xy = raw.narrow(1, 4, 2);
  auto t_z = torch::softplus(raw.narrow(1, 6, 1)) + config_.t_z_min;
  out.pose_params = torch::cat({az / az_n, el / el_n, t_xy, t_z}, 1);
  return out;
}

void ImageEncoderImpl::load_backbone(const std::map<std::string, torch::Tensor>& params) {
  torch::NoGradGuard no_grad;
  auto named = named_parameters();
  for (const auto& [name, value] : params) {
    auto* dst = named.find(name);
    if (dst == nullptr) throw ArgumentError("no encoder parameter named '" + name + "'");
    if (dst->sizes() != value.sizes()) {
      throw ArgumentError("shape mismatch loading encoder parameter '" + name + "'");
    }
    dst->copy_(value);
  }
}

void DiscriminatorConfig::validate() const {
  if (patch_size < 8) throw ArgumentError("discriminator patch_size must be >= 8");
  if (in_channels != 1 && in_channels != 3) {
    throw ArgumentError("discriminator in_channels must be 1 or 3");
  }
  if (base_channels < 1) throw ArgumentError("discriminator base_channels must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ArgumentError("dropout must be in [0, 1)");
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(DiscriminatorConfig config)
    : config_(std::move(config)) {
  config_.validate();
  const int c = config_.base_channels;
  body_ = nn::Sequential(
      nn::Conv2d(nn::Conv2dOptions(config_.in_channels, c, 4).stride(2).padding(1)),
      nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)),
      nn::Conv2d(nn::Conv2dOptions(c, 2 * c, 4).stride(2).padding(1)),
      nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)),
      nn::Conv2d(nn::Conv2dOptions(2 * c, 4 * c, 4).stride(2).padding(1)),
      nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)),
      nn::Dropout(nn::DropoutOptions(config_.dropout)), nn::Flatten());
  register_module("body", body_);
  const int spatial = config_.patch_size / 8;
  head_ = register_module("head", nn::Linear(4 * c * spatial * spatial, 1));
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& patch) {
  if (patch.dim() != 4 || patch.size(1) != config_.in_channels ||
      patch.size(2) != config_.patch_size || patch.size(3) != config_.patch_size) {
    throw ArgumentError("discriminator expects [B, " + std::to_string(config_.in_channels) +
                        ", " + std::to_string(config_.patch_size) + ", " +
                        std::to_string(config_.patch_size) + "] patches");
  }
  return head_->forward(body_->forward(patch)).squeeze(-1);
}

PatchDiscriminator make_color_discriminator(int patch_size, int base_channels) {
  DiscriminatorConfig cfg;
  cfg.patch_size = patch_size;
  cfg.in_channels = 3;
  cfg.base_channels = base_channels;
  return PatchDiscriminator(cfg);
}

PatchDiscriminator make_alpha_discriminator(int patch_size, int base_channels) {
  DiscriminatorConfig cfg;
  cfg.patch_size = patch_size;
  cfg.in_channels = 1;
  cfg.base_channels = base_channels;
  return PatchDiscriminator(cfg);
}

int64_t count_parameters(const torch::nn::Module& module) {
  int64_t total = 0;
  for (const auto& p : module.parameters()) {
    total += p.numel();
  }
  return total;
}

}  // namespace objnerf
