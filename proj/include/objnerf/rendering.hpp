// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <torch/torch.h>

#include "objnerf/common.hpp"
#include "objnerf/field.hpp"
#include "objnerf/geometry.hpp"

namespace objnerf {

struct SamplingConfig {
  double near = 0.1;
  double far = 4.0;
  int num_coarse = 64;
  int num_fine = 128;
  bool jitter = true;

  void validate() const {
    if (!(0.0 <= near && near < far)) throw ArgumentError("sampling requires 0 <= near < far");
    if (num_coarse < 1 || num_fine < 1) throw ArgumentError("sample counts must be >= 1");
  }
};

// A regular pixel grid: patch_height x patch_width pixels starting at
// `offset` and advancing by `stride` (fractional strides are floored per
// pixel so a patch can span the full image extent).
struct PatchSpec {
  int patch_height = 80;
  int patch_width = 80;
  double stride = 1.0;
  double offset_x = 0.0;
  double offset_y = 0.0;
};

// Pixel coordinates [ph*pw, 2] of the patch grid, row-major (v outer, u
// inner). Throws ArgumentError when the strided grid leaves the image.
torch::Tensor patch_pixels(const PatchSpec& patch, int image_width, int image_height);

// PatchSpec whose grid spans the whole image extent at the given patch
// resolution (stride = image / patch).
PatchSpec full_extent_patch(int patch_size, int image_width, int image_height);

struct RenderOutput {
  torch::Tensor rgb;      // [..., 3]
  torch::Tensor alpha;    // [...], accumulated opacity in [0, 1]
  torch::Tensor depth;    // [...], opacity-weighted expected termination
  torch::Tensor weights;  // [..., N] per-sample compositing weights
};

// One t per evenly spaced bin between near and far: bin midpoints, or
// uniform within each bin when cfg.jitter is set. Output [ray_count, Nc],
// strictly increasing along the last dimension.
torch::Tensor stratified_sample(const SamplingConfig& cfg, int64_t ray_count,
                                torch::Generator& gen, torch::Dtype dtype = torch::kFloat32);

// Inverse-CDF draws from the piecewise-constant density proportional to
// `weights` over the coarse bins (bin edges at midpoints of consecutive
// coarse t values, end bins extended symmetrically). All-zero weight rows
// fall back to uniform. Output [R, num_fine], sorted. Not differentiated:
// weights are detached internally.
torch::Tensor hierarchical_resample(const torch::Tensor& coarse_t, const torch::Tensor& weights,
                                    int num_fine, torch::Generator& gen);

// Volume compositing along rays (density [..., N], rgb [..., N, 3],
// t_values [..., N] strictly increasing):
//   delta_i = t_{i+1} - t_i, with the last interval closed at `far`;
//   T_i = exp(-sum_{j<i} sigma_j delta_j);
//   w_i = T_i (1 - exp(-sigma_i delta_i));
//   color = sum w_i c_i, alpha = sum w_i,
//   depth = sum w_i t_i / max(alpha, 1e-8).
RenderOutput composite_ray(const torch::Tensor& density, const torch::Tensor& rgb,
                           const torch::Tensor& t_values, double far);

// Full coarse-to-fine pipeline for a batch of rays: coarse stratified pass,
// importance resampling from the coarse weights, then one composite over
// the sorted union of coarse and fine samples through the same field.
// Rays are processed in chunks of `chunk_rays` (0 = all at once); all
// random draws happen up front, so the chunk size never changes which
// random numbers a ray receives.
RenderOutput render_rays(const FieldFn& field, const torch::Tensor& origins,
                         const torch::Tensor& directions, const SamplingConfig& cfg,
                         torch::Generator& gen, int64_t chunk_rays = 0);

RenderOutput render_patch(const FieldFn& field, const CameraPose& pose, const Intrinsics& intr,
                          const PatchSpec& patch, const SamplingConfig& cfg, torch::Generator& gen,
                          torch::Dtype dtype = torch::kFloat32, int64_t chunk_rays = 0);

}  // namespace objnerf
