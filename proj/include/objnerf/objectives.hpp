// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <torch/torch.h>
#include <utility>
#include <vector>

#include "objnerf/common.hpp"
#include "objnerf/geometry.hpp"

namespace objnerf {

struct LossWeights {
  double recon_color = 1.0;
  double recon_alpha = 1.0;
  double adv_color = 1.0;
  double adv_alpha = 1.0;
  double pose_consistency = 50.0;
  double pose_supervised = 0.0;  // 0 disables the term

  void validate() const {
    for (double w : {recon_color, recon_alpha, adv_color, adv_alpha, pose_consistency,
                     pose_supervised}) {
      if (w < 0.0) throw ArgumentError("loss weights must be non-negative");
    }
  }
};

// Per-term scalar values plus the weighted total. Term names are stable
// identifiers used in the training log.
struct LossReport {
  std::vector<std::pair<std::string, double>> terms;
  double total = 0.0;

  double term(const std::string& name) const;
  bool has_term(const std::string& name) const;
  // One "step <tab> term <tab> value" line per term, then the total.
  std::string to_log_lines(int64_t step) const;
};

// Mean squared difference over all pixels/channels. Used for both color
// and alpha reconstruction.
torch::Tensor reconstruction_loss(const torch::Tensor& target, const torch::Tensor& rendered);

struct AdversarialLosses {
  torch::Tensor discriminator;  // -E[log s(real) + log(1 - s(fake))]
  torch::Tensor generator;      // non-saturating -E[log s(fake)] by default
};

// Logistic GAN losses from raw logits. Probabilities are clamped at 1e-7
// before the logs. `saturating` switches the generator to E[log(1 - s(fake))].
AdversarialLosses adversarial_losses(const torch::Tensor& real_logits,
                                     const torch::Tensor& fake_logits, bool saturating = false);

// Mean squared difference over the 7-number pose parametrization; raw
// (cos, sin) pairs are normalized before comparison.
torch::Tensor pose_consistency_loss(const torch::Tensor& sampled_params,
                                    const torch::Tensor& reestimated_params);

// MSE over the translation triple plus MSE over the 4 normalized rotation
// parameters, summed.
torch::Tensor pose_supervised_loss(const torch::Tensor& pred_params,
                                   const torch::Tensor& gt_params);

// Scalar values of the individual (unweighted) terms. Terms that are
// disabled stay unset.
struct LossTerms {
  std::optional<double> recon_color;
  std::optional<double> recon_alpha;
  std::optional<double> adv_color;
  std::optional<double> adv_alpha;
  std::optional<double> pose_consistency;
  std::optional<double> pose_supervised;
};

// Weighted sum of the present terms; missing optional terms contribute 0.
LossReport combine_losses(const LossTerms& terms, const LossWeights& weights);

}  // namespace objnerf
