// SPDX-License-Identifier: Apache-2.0
#include "objnerf/objectives.hpp"

#include <sstream>

namespace objnerf {

double LossReport::term(const std::string& name) const {
  for (const auto& [k, v] : terms) {
    if (k == name) return v;
  }
  throw ArgumentError("no loss term named '" + name + "'");
}

bool LossReport::has_term(const std::string& name) const {
  for (const auto& [k, v] : terms) {
    if (k == name) return true;
  }
  return false;
}

std::string LossReport::to_log_lines(int64_t step) const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& [k, v] : terms) {
    os << step << "\t" << k << "\t" << v << "\n";
  }
  os << step << "\ttotal\t" << total << "\n";
  return os.str();
}

torch::Tensor reconstruction_loss(const torch::Tensor& target, const torch::Tensor& rendered) {
  if (target.sizes() != rendered.sizes()) {
    throw ArgumentError("reconstruction loss requires equal shapes");
  }
  return (target - rendered).square().mean();
}

AdversarialLosses adversarial_losses(const torch::Tensor& real_logits,
                                     const torch::Tensor& fake_logits, bool saturating) {
  auto log_clamped = [](const torch::Tensor& p) { return torch::log(p.clamp_min(1e-7)); };
  auto s_real = torch::sigmoid(real_logits);
  auto s_fake = torch::sigmoid(fake_logits);
  AdversarialLosses out;
  out.discriminator = -(log_clamped(s_real) + log_clamped(1.0 - s_fake)).mean();
  out.generator = saturating ? log_clamped(1.0 - s_fake).mean() : -log_clamped(s_fake).mean();
  return out;
}

torch::Tensor pose_consistency_loss(const torch::Tensor& sampled_params,
                                    const torch::Tensor& reestimated_params) {
  auto a = normalize_pose_params(sampled_params);
  auto b = normalize_pose_params(reestimated_params);
  return (a - b).square().mean();
}

torch::Tensor pose_supervised_loss(const torch::Tensor& pred_params,
                                   const torch::Tensor& gt_params) {
  if (!gt_params.defined()) {
    throw ArgumentError("pose_supervised_loss called on a record without ground-truth pose");
  }
  auto p = normalize_pose_params(pred_params);
  auto g = normalize_pose_params(gt_params);
  auto rot = (p.narrow(-1, 0, 4) - g.narrow(-1, 0, 4)).square().mean();
  auto trans = (p.narrow(-1, 4, 3) - g.narrow(-1, 4, 3)).square().mean();
  return rot + trans;
}

LossReport combine_losses(const LossTerms& terms, const LossWeights& weights) {
  weights.validate();
  LossReport report;
  auto add = [&](const char* name, const std::optional<double>& value, double weight) {
    if (!value.has_value()) return;
    report.terms.emplace_back(name, *value);
    report.total += weight * (*value);
  };
  add("recon_color", terms.recon_color, weights.recon_color);
  add("recon_alpha", terms.recon_alpha, weights.recon_alpha);
  add("adv_color", terms.adv_color, weights.adv_color);
  add("adv_alpha", terms.adv_alpha, weights.adv_alpha);
  add("pose_consistency", terms.pose_consistency, weights.pose_consistency);
  add("pose_supervised", terms.pose_supervised, weights.pose_supervised);
  return report;
}

}  // namespace objnerf
