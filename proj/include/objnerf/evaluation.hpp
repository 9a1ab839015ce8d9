// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <torch/torch.h>
#include <vector>

#include "objnerf/common.hpp"
#include "objnerf/data.hpp"
#include "objnerf/geometry.hpp"
#include "objnerf/networks.hpp"
#include "objnerf/rendering.hpp"

namespace objnerf {

// Peak signal-to-noise ratio in dB at peak 1. Zero MSE (and anything above
// the cap) reports 100 dB.
double psnr(const torch::Tensor& a, const torch::Tensor& b);

// Standard SSIM: 11x11 Gaussian window, sigma 1.5, C1 = 0.01^2, C2 = 0.03^2
// at peak 1, channel-averaged, valid-window mean. Images must be at least
// 11 pixels on every side.
double ssim(const torch::Tensor& a, const torch::Tensor& b);

// PSNR over the union of the two foreground masks (alpha >= 0.5), with
// pixels outside the union forced to a shared canvas value.
double masked_psnr(const torch::Tensor& a, const torch::Tensor& b, const torch::Tensor& alpha_a,
                   const torch::Tensor& alpha_b, double canvas = 0.0);

struct EvalRecordResult {
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalReport {
  std::vector<EvalRecordResult> records;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double alignment_residual = 0.0;
  std::string regime_label;

  // Tab-separated per-record table followed by a summary block.
  std::string to_table() const;
  void finalize();  // recomputes the means from the records
};

struct EvalConfig {
  SamplingConfig sampling{0.1, 4.0, 64, 64, false};
  // Leading fraction of instances whose input views calibrate the offset
  // rotation; all instances are scored.
  double calibration_fraction = 0.2;
  int64_t chunk_rays = 2048;
  uint64_t seed = 0;
  std::string regime_label;
};

// Groups manifest records into instances by the "<instance>_v<k>" id
// convention: view 0 is the input view, later views are held-out targets.
struct EvalInstance {
  size_t input_record = 0;
  std::vector<size_t> target_records;
};
std::vector<EvalInstance> group_eval_instances(const ManifestDataset& dataset);

// Novel-view evaluation of a trained model: encode the input view of each
// instance, fit the universal offset rotation on the calibration split
// (predicted vs ground-truth input poses), render every held-out target
// view at its offset-corrected pose, and score PSNR/SSIM against the
// stored target images. All records need ground-truth poses.
EvalReport evaluate_novel_views(Model& model, const ManifestDataset& dataset,
                                const EvalConfig& cfg);

// Same protocol with the model bypassed: the analytic field of each stored
// scene spec plus the ground-truth pose (identity offset). Upper-bounds the
// pipeline's reachable quality.
EvalReport evaluate_analytic_oracle(const std::vector<SyntheticSceneSpec>& specs,
                                    const ManifestDataset& dataset, const EvalConfig& cfg);

}  // namespace objnerf
