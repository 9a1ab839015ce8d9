// SPDX-License-Identifier: Apache-2.0
#include "objnerf/encoding.hpp"

#include <cmath>

namespace objnerf {

double anneal_weight(int frequency_index, double progress, int num_frequencies) {
  if (frequency_index < 0 || frequency_index >= num_frequencies) {
    throw ArgumentError("frequency index " + std::to_string(frequency_index) +
                        " outside [0, " + std::to_string(num_frequencies) + ")");
  }
  const double x = std::clamp(progress * num_frequencies - frequency_index, 0.0, 1.0);
  return (1.0 - std::cos(M_PI * x)) / 2.0;
}

torch::Tensor anneal_weights(double progress, int num_frequencies, torch::Dtype dtype) {
  auto k = torch::arange(num_frequencies, torch::kFloat64);
  auto x = (progress * num_frequencies - k).clamp(0.0, 1.0);
  return (((1.0 - torch::cos(M_PI * x)) / 2.0)).to(dtype);
}

torch::Tensor positional_encode(const torch::Tensor& x, const EncodingConfig& cfg,
                                double progress) {
  cfg.validate();
  if (!torch::isfinite(x).all().item<bool>()) {
    throw NumericError("positional_encode input contains non-finite values");
  }
  std::vector<torch::Tensor> parts;
  parts.reserve(1 + 2 * cfg.num_frequencies);
  if (cfg.include_raw_input) {
    parts.push_back(x);
  }
  if (cfg.num_frequencies > 0) {
    auto weights = anneal_weights(progress, cfg.num_frequencies, x.scalar_type());
    for (int k = 0; k < cfg.num_frequencies; ++k) {
      auto scaled = x * (std::pow(2.0, k) * M_PI);
      auto w = weights[k];
      parts.push_back(w * torch::sin(scaled));
      parts.push_back(w * torch::cos(scaled));
    }
  }
  return torch::cat(parts, -1);
}

}  // namespace objnerf
